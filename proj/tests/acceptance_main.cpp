// placeholder; filled in after the library compiles
int main() { return 0; }
