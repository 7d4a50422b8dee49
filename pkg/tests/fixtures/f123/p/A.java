package p;

public class A {
    public int x;
    public int y;
    public void m1() { x = 1; }
    public void m2() { x = 2; }
    public void m3() { y = 3; }
}
