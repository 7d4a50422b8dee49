package p;

class D extends A { }
