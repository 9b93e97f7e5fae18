#include <cstdio>
int main(){ std::puts("slitfb placeholder"); return 0; }
