void main(int n, int x) {
    int d = 0;
    for (int i = 0; i < n; i++) {
        d = d - x;
    }
}
