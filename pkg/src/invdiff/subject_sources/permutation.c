static int count;

static void permute(int *a, int l, int n) {
    if (l == n - 1) {
        count++;
        return;
    }
    for (int i = n - 1; i >= l; i--) {
        int t = a[l]; a[l] = a[i]; a[i] = t;
        permute(a, l + 1, n);
    }
}

int permutations(int *a, int n) {
    count = 0;
    permute(a, 0, n);
    return count;
}
