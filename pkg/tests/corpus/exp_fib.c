void main(int n, int y) {
    int z = 1;
    int t = 0;
    for (int i = 0; i < n; i++) {
        t = y + z;
        z = y;
        y = t;
    }
}
