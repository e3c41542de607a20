#include <cstdio>

void f(int& v) {
    v = v * 2;
}

void g(int& w) {
    w = w + 5;
}

void synchronization(int& other) {
    int var = 3;
    f(var);
    g(other);
    var += 1;
    other += var;
}

int main() {
    int o = 1;
    synchronization(o);
    printf("%d\n", o);
    return 0;
}
