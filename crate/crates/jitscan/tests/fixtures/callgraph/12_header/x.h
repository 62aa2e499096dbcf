#ifndef X_H
#define X_H
static inline int sq(int v) { return v * v; }
int cube(int v);
#endif
