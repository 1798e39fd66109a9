void main(int n, int c) {
    int p = 0;
    int q = 0;
    int s = 0;
    int k = 0;
    while (k < n) {
        q = p * p;
        p = c * c;
        s = s + q;
        k = k + 1;
    }
}
