unsigned int popcount(unsigned int x)
{
    unsigned int n = 0;
    while (x != 0u) {
        n = n + (x & 1u);
        x = x >> 1;
    }
    return n;
}
