package com.adsdk.internal;

import android.content.Context;
import android.telephony.TelephonyManager;

/* loaded from: classes.dex */
public class DeviceInfo {
    public static String deviceId(Context context) {
        TelephonyManager tm = (TelephonyManager) context.getSystemService("phone");
        try {
            return tm.getDeviceId();
        } catch (SecurityException e) {
            return null;
        }
    }
}
