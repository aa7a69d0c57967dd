int flip(int x)
{
    int y = -x;
    y = ~y;
    return !y + y;
}
