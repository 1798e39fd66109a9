void main(int n, int y) {
    for (int i = 0; i < n; i++) {
        y = 2 * y;
    }
}
