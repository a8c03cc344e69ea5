package demo;

class G {
    int sum(int[] xs) {
        int total = 0;
        for (int i = 0; i < xs.length; i++) {
            if (xs[i] > 100) {
                total += xs[i] * 2;
            }
        }
        return total;
    }
}
