void main(int n, int w) {
    int t = 0;
    int u = 0;
    int v = 0;
    for (int i = 0; i < n; i++) {
        t = u;
        u = v;
        v = w;
    }
}
