unsigned short gcd(unsigned short a, unsigned short b)
{
    unsigned short t;
    if (a == 0) return b;
    while (b != 0) {
        t = a % b;
        a = b;
        b = t;
    }
    return a;
}
