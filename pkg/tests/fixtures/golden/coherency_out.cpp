void f(int& v){
    v = v * 2;
}
void g(int& w){
    w = w + 5;
}
void synchronization(int& other){
    #pragma omp taskgroup
    {
int var;
#pragma omp task depend(inout: var) default(shared)
{
    f(var);
}
#pragma omp task depend(inout: other) default(shared)
{
    g(other);
}
#pragma omp taskwait
var += 1;
    }
}
