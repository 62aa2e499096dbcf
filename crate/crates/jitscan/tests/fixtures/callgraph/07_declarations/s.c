struct point { int x; int y; };
typedef struct { int w; } box_t;
static int table[3] = { 1, 2, 3 };
enum color { RED, GREEN };
struct point make_point(int x, int y)
{
    struct point p = { x, y };
    return p;
}
int area(box_t *b)
{
    struct point p = make_point(b->w, b->w);
    return p.x * p.y + table[0];
}
