int g(int x)
{
    return x + 1;
}

int f(int x)
{
    if (x) { g(x); }
    for (int i = 0; i < x; i++)
        while (g(i)) break;
    switch (x) { default: break; }
    do { x--; } while (x > 0);
    return sizeof(x) + g(2);
}
