package demo;

import java.util.concurrent.TimeUnit;

class D {
    void go(Executor ex) {
        ex.schedule(task, 250, TimeUnit.MILLISECONDS);
        ex.shutdown(true);
    }
}
