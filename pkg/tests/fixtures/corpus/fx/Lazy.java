package fx;

class Lazy {
    Wallet w = new Wallet();
    int c = w.cash;
}
