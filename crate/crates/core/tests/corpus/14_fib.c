unsigned int fib(unsigned char n)
{
    unsigned int a = 0;
    unsigned int b = 1;
    unsigned int t;
    unsigned char i;
    for (i = 0; i < n; i++) {
        t = a + b;
        a = b;
        b = t;
    }
    return a;
}
