#include <assert.h>
#include <limits.h>

int second_max(const int *arr, int n) {
    assert(n >= 2);
    int max = arr[0], sec = INT_MIN;
    for (int i = 1; i < n; i++) {
        int x = arr[i];
        sec = (x > max) ? sec : ((x > sec && x != max) ? x : sec);
        max = (x > max) ? x : max;
    }
    return sec;
}
