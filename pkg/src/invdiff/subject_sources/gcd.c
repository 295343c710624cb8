#include <assert.h>
#include <stdlib.h>

static int gcd_rec(int a, int b) {
    if (a == 0)
        return b;
    int r = b % a;
    return gcd_rec(r, b);
}

int gcd(int x, int y) {
    int a = abs(x), b = abs(y);
    assert(a != 0 && b != 0);
    int g = gcd_rec(a, b);
    return g;
}
