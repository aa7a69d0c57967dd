void matmul(const short a[4], const short b[4], int c[4])
{
    int i;
    int j;
    for (i = 0; i < 2; i++) {
        for (j = 0; j < 2; j++) {
            c[i * 2 + j] = a[i * 2] * b[j] + a[i * 2 + 1] * b[2 + j];
        }
    }
}
