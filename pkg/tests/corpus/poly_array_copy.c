void main(int n, int x) {
    int a[n];
    int b[n];
    for (int i = 0; i < n; i++) {
        a[i] = x;
    }
    for (int j = 0; j < n; j++) {
        b[j] = a[j];
    }
}
