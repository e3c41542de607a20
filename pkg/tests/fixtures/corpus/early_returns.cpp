#include <cstdio>

void work(int& v) {
    v = v * 3 + 1;
}

int pick(int a, int b) {
    if (a > b) {
        work(a);
        return a;
    }
    work(b);
    if (b > 20) {
        return b - 20;
    }
    work(a);
    return a + b;
}

int main() {
    int r1 = pick(9, 2);
    int r2 = pick(1, 8);
    int r3 = pick(1, 2);
    printf("%d %d %d\n", r1, r2, r3);
    return 0;
}
