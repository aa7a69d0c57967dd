unsigned int sum(const unsigned int v[8])
{
    unsigned int s = 0;
    int i;
    for (i = 0; i < 8; i++) {
        s += v[i];
    }
    return s;
}
