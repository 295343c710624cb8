#include <assert.h>
#include <string.h>

void reverse(char *s) {
    int n = strlen(s);
    assert(n <= 32);
    for (int i = 0; i < (n - 1) / 2; i++) {
        int j = n - 1 - i;
        char t = s[i];
        s[i] = s[j];
        s[j] = t;
    }
    return;
}
