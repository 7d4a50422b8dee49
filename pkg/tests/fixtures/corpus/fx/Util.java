package fx;

class Util {
    static final int LIMIT = 10;

    static int clamp(int v) {
        return v > LIMIT ? LIMIT : v;
    }
}
