package com.example.weather;

class Unused {
    private int retries = 9;
    private boolean verbose = false;

    void run() {
        configure(100, true);
    }
}
