int ok(void) { return helper_ok(); }
int helper_ok(void) { return 1; }
