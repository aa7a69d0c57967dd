void prefix(const int v[6], int out[6])
{
    int i;
    int acc = 0;
    for (i = 0; i < 6; i++) {
        acc = acc + v[i];
        out[i] = acc;
    }
}
