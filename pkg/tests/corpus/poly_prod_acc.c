void main(int n, int x, int y) {
    int t = 0;
    int s = 0;
    for (int i = 0; i < n; i++) {
        t = x * y;
        s = s + t;
    }
}
