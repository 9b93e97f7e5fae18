#include <cstdio>
int main(){ std::puts("acceptance suite not wired yet"); return 1; }
