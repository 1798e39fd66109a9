void main(int n, int x) {
    int s = 0;
    int t = 0;
    for (int i = 0; i < n; i++) {
        s = s + x;
    }
    for (int j = 0; j < n; j++) {
        t = t + s;
    }
}
