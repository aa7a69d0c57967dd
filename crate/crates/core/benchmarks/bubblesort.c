/* Branch-free bubble sort; returns the number of swaps. */
int bubblesort(int a[8])
{
    int i;
    int j;
    int k;
    int x;
    int y;
    int m;
    int n;
    n = 0;
    for (i = n; i < 7; i++) {
        for (j = 7; j > i; j--) {
            k = j - 1;
            x = a[k];
            y = a[j];
            m = -(y < x);
            a[k] = x ^ ((x ^ y) & m);
            a[j] = y ^ ((x ^ y) & m);
            n = n - m;
        }
    }
    return n;
}
