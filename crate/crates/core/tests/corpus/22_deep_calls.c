int inc(int x) { return x + 1; }
int twice(int x) { return inc(inc(x)); }
void apply(int x, int *y) { *y = twice(x) * 3; }
