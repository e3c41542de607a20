#include <cstdio>

void fib(int n, int& out) {
    if (n < 2) {
        out = n;
        return;
    }
    int a = 0;
    int b = 0;
    fib(n - 1, a);
    fib(n - 2, b);
    out = a + b;
}

int main() {
    int r = 0;
    fib(6, r);
    printf("%d\n", r);
    return 0;
}
