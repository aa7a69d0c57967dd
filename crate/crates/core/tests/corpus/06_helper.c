int sq(int x) { return x * x; }

int dist(int a, int b)
{
    return sq(a - b) + sq(b);
}
