void main(int n, int y) {
    int k = 0;
    while (k < n) {
        y = 3 * y;
        k = k + 1;
    }
}
