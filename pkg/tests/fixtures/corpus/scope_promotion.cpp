#include <cstdio>

void work(int& v) {
    v = v + 10;
}

void use(int a, int b, int& out) {
    out = a * 100 + b;
}

void declaration_in_scope(int z, int& out) {
    if (z > 0) {
        int var1 = z;
        int& var2 = z;
        work(var1);
        use(var1, var2, out);
    }
}

int main() {
    int r = 0;
    declaration_in_scope(4, r);
    printf("%d\n", r);
    return 0;
}
