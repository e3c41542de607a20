#include <cstdio>

void apply(int& v, int op) {
    v = v * 2 + op;
}

int main() {
    int state = 1;
    int hits = 0;
    for (int op = 0; op < 4; op++) {
        switch (op) {
        case 0:
            apply(state, 1);
            break;
        case 2:
            apply(hits, 5);
        case 3:
            apply(state, 2);
            break;
        default:
            hits += 1;
        }
    }
    printf("%d %d\n", state, hits);
    return 0;
}
