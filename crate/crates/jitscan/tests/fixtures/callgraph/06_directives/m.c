#include <stdio.h>
#define MAX(a, b) ((a) > (b) ? (a) : (b))
#define WRAP(x) \
    do_wrap(x)
#ifdef DEBUG
#endif
int pick(int a, int b)
{
    int m = MAX(a, b);
    return WRAP(m);
}
int do_wrap(int x) { return x; }
