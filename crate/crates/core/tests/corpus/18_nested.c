int classify(int x, int y)
{
    int c = 0;
    if (x > 0) {
        if (y > 0) {
            c = 1;
        } else if (y < 0) {
            c = 4;
        } else {
            c = 5;
        }
    } else {
        c = x == 0 ? 6 : 2;
    }
    return c;
}
