#include <cstdio>

void incr(int* p) {
    *p = *p + 1;
}

void read_into(const int* p, int& out) {
    out = *p * 10;
}

int main() {
    int x = 5;
    int y = 0;
    int total = 0;
    for (int k = 0; k < 2; k++) {
        int* px = &x;
        incr(px);
        read_into(&x, y);
        total += y;
    }
    printf("%d %d %d\n", x, y, total);
    return 0;
}
