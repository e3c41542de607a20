void work(int& v){
    v = v + 1;
}
void use(int a, int b){
    int s = a + b;
}
void declaration_in_scope(int z){
    if(z > 0){
        int var1;
        int& var2 = z;
        work(var1);
        use(var1, var2);
    }
}
