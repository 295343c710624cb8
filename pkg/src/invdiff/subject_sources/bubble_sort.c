static void swap(int *x, int *y) {
    int t = *x; *x = *y; *y = t;
}

int bubble_sort(int *a, int n) {
    for (int i = 0; i < n - 1; i++) {
        for (int j = 0; j < n - 2 - i; j++) {
            if (a[j] > a[j + 1])
                swap(&a[j], &a[j + 1]);
        }
        int placed = a[n - 1 - i];
    }
    return a[n - 1];
}
