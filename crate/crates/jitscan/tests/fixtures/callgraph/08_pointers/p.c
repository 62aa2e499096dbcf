typedef int (*handler_t)(int);
static int apply(handler_t h, int v)
{
    return h(v);
}
static int twice(int v)
{
    return (int)(v * 2);
}
int dispatch(int v)
{
    handler_t fp = twice;
    return apply(fp, v) + fp(v);
}
