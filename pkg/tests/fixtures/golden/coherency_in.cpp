void f(int& v){
    v = v * 2;
}
void g(int& w){
    w = w + 5;
}
void synchronization(int& other){
    int var;
    f(var);
    g(other);
    var += 1;
}
