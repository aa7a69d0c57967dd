/* Auto-regression filter stage: four 4-tap dot products. */
void arf(const int x[8], const int c[8], int y[4])
{
    y[0] = x[0] * c[0] + x[1] * c[1] + x[2] * c[2] + x[3] * c[3];
    y[1] = x[4] * c[4] + x[5] * c[5] + x[6] * c[6] + x[7] * c[7];
    y[2] = x[0] * c[4] + x[1] * c[5] + x[2] * c[6] + x[3] * c[7];
    y[3] = x[4] * c[0] + x[5] * c[1] + x[6] * c[2] + x[7] * c[3];
}
