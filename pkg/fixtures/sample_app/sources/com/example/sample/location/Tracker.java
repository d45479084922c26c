package com.example.sample.location;

import android.content.Context;
import android.location.Location;
import android.location.LocationManager;

/* loaded from: classes.dex */
public class Tracker {
    private final LocationManager locationManager;

    public Tracker(Context context) {
        this.locationManager = (LocationManager) context.getSystemService("location");
    }

    public Location lastFix() {
        try {
            return this.locationManager.getLastKnownLocation("gps");
        } catch (SecurityException e) {
            return null;
        }
    }
}
