/* void fake(){ hidden(); } */
static const char *msg = "call_me() { }";
// int nope() { gone(); }
void real(void)
{
    puts("not_a_call(1)"); /* skipped(2) */
    char c = '(';
    log_it(c); // tail_call()
}
void log_it(char c)
{
    putchar(c);
}
