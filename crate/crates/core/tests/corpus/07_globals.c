const unsigned char sbox[8] = { 0x3, 0x7, 0x1, 0x6, 0x0, 0x5, 0x2, 0x4 };
unsigned char scale = 3;

unsigned char sub(unsigned char x)
{
    return sbox[x & 7] * scale;
}
