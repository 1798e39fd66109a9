void main(int n, int y) {
    int t = 0;
    for (int i = 0; i < n; i++) {
        t = y;
        y = y + t;
    }
}
