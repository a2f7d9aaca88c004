#include <cstdio>
int main() { std::puts("clgr: placeholder"); return 0; }
