#include <cstdio>

class Account {
public:
    int balance;
    void deposit(int v) {
        balance += v;
    }
    int get() const {
        return balance;
    }
};

void audit(const Account& acct, int& seen) {
    seen = acct.get();
}

int main() {
    Account a;
    a.balance = 10;
    Account b;
    b.balance = 1;
    a.deposit(5);
    b.deposit(7);
    int sa = 0;
    int sb = 0;
    audit(a, sa);
    audit(b, sb);
    a.deposit(sb);
    printf("%d %d %d\n", a.get(), sa, sb);
    return 0;
}
