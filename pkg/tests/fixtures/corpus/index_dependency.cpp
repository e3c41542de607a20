#include <cstdio>

void next_index(int& i, int step) {
    i = i + step;
}

void store(int* a, int pos, int v) {
    a[pos] = v;
}

void scale(int& v, int k) {
    v = v * k;
}

int main() {
    int a[6];
    for (int k = 0; k < 6; k++) a[k] = k;
    int i = 0;
    next_index(i, 2);
    scale(a[i], 10);
    next_index(i, 1);
    store(a, i, 99);
    printf("%d %d %d %d\n", i, a[2], a[3], a[5]);
    return 0;
}
