package com.example.sample;

import android.app.Activity;
import android.hardware.camera2.CameraAccessException;
import android.hardware.camera2.CameraDevice;
import android.hardware.camera2.CameraManager;
import android.os.Bundle;
import android.util.Log;
import com.example.sample.location.Tracker;

/* loaded from: classes.dex */
public class MainActivity extends Activity {
    private static final String TAG = "MainActivity";
    private Tracker tracker;

    @Override // android.app.Activity
    protected void onCreate(Bundle savedInstanceState) {
        super.onCreate(savedInstanceState);
        this.tracker = new Tracker(this);
        openFrontCamera();
    }

    private void openFrontCamera() {
        CameraManager manager = (CameraManager) getSystemService("camera");
        try {
            String id = manager.getCameraIdList()[0];
            manager.openCamera(id, new CameraDevice.StateCallback() { // from class: com.example.sample.MainActivity.1
                @Override // android.hardware.camera2.CameraDevice.StateCallback
                public void onOpened(CameraDevice camera) {
                    Log.d(MainActivity.TAG, "camera opened");
                }

                @Override // android.hardware.camera2.CameraDevice.StateCallback
                public void onDisconnected(CameraDevice camera) {
                    camera.close();
                }

                @Override // android.hardware.camera2.CameraDevice.StateCallback
                public void onError(CameraDevice camera, int error) {
                    camera.close();
                }
            }, null);
        } catch (CameraAccessException e) {
            Log.e(TAG, "camera unavailable", e);
        }
    }
}
