void main(int n, int y) {
    int z = 1;
    for (int i = 0; i < n; i++) {
        z = z + y;
        y = z;
    }
}
