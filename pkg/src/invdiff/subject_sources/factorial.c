#include <assert.h>

long factorial(int x) {
    assert(x >= 0);
    int n = x % 13;
    long acc = 1;
    for (int i = 1; i < n; i++) {
        acc = acc * i;
    }
    return acc;
}
