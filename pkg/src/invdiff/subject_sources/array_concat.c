#include <stddef.h>

int concat(const int *a, int na, const int *b, int nb, int *out) {
    int k = 0;
    for (int i = 0; i < na; i++) {
        out[k] = a[i];
        k++;
    }
    for (int j = 1; j < nb; j++) {
        out[k] = b[j];
        k++;
    }
    return k;
}
