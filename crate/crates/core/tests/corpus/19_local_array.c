int reverse_sum(const int v[4])
{
    int w[4];
    int i;
    int s = 0;
    for (i = 0; i < 4; i++) w[3 - i] = v[i];
    for (i = 0; i < 4; i++) s = s * 3 + w[i];
    return s;
}
