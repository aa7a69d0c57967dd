int mix(int a, int b, int c)
{
    int t;
    t = a * b + c;
    t = t ^ (a - c);
    if (t < b) {
        t = t | a;
    }
    return t & b;
}
