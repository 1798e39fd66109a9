int sq(int x) {
    int r;
    r = x * x;
    return r;
}

void main(int y) {
    int z;
    z = sq(y);
    z = z + 1;
}
