package fx;

class UseUtil {
    int go(int v) {
        return Util.clamp(v) + Util.LIMIT + Util.clamp(v + 1);
    }
}
