void main(int n, int m, int c) {
    int x = 0;
    int t = 0;
    int k = 0;
    while (k < n) {
        for (int j = 0; j < m; j++) {
            t = c + c;
        }
        x = x + t;
        k = k + 1;
    }
}
