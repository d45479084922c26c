package com.example.dangerous;

import android.app.Activity;
import android.util.Log;

public class MainActivity {
    private int counter;

    public void onCreate(android.os.Bundle state) {
        counter = computeStart(state);
        Log.d("Dangerous", "started " + counter);
    }

    private int computeStart(android.os.Bundle state) {
        return state == null ? 0 : state.getInt("counter");
    }
}
