int parse(const char *s);
int run(const char *s)
{
    int r = parse(s);
    return finish(r);
}
