unsigned int mixer(unsigned int a, unsigned int b)
{
    a += b;
    a ^= a << 5;
    b -= a;
    b |= 0x10u;
    a *= 33u;
    a >>= 3;
    a &= 0xffffu;
    b %= 7u;
    a--;
    ++b;
    return a ^ b;
}
