package com.example.sample.util;

/* loaded from: classes.dex */
public final class Strings {
    private Strings() {
    }

    // Deliberately no telephony import: mentioning getImei() here must not count.
    public static String mask(String value) {
        if (value == null || value.length() < 4) {
            return "****";
        }
        return "****" + value.substring(value.length() - 4);
    }
}
