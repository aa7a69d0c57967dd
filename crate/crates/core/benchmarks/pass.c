/* One bubble pass over four elements. */
void pass(int v[4])
{
    int i;
    int t;
    for (i = 0; i < 3; i++) {
        if (v[i] > v[i + 1]) {
            t = v[i];
            v[i] = v[i + 1];
            v[i + 1] = t;
        }
    }
}
