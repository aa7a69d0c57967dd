/* The second statement undoes the first. */
unsigned char cancel(unsigned char x, unsigned char y)
{
    unsigned char t;
    t = x + y;
    t = t - y;
    return t;
}
