void work(int& v){
    v = v + 1;
}
int functionWithReturn(int a, int b){
int apac_res;
#pragma omp taskgroup
{
    if(a>b){
        #pragma omp task depend(inout: a) default(shared)
        {
            work(a);
        }
        #pragma omp taskwait
        apac_res = a;
        goto apac_endtaskgrouplabel_functionWithReturn;
    }
    else{
        #pragma omp task depend(inout: b) default(shared)
        {
            work(b);
        }
        #pragma omp taskwait
        apac_res = b;
        goto apac_endtaskgrouplabel_functionWithReturn;
    }
apac_endtaskgrouplabel_functionWithReturn: ;
}
return apac_res;
}
