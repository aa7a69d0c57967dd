unsigned int shift(unsigned int a, unsigned int b)
{
    unsigned int s;
    s = (a << 3) + (b >> 2);
    s = s * (a | b);
    return s - (a & b);
}
