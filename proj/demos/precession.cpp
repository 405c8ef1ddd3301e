int main() { return 0; }  // placeholder until the library surface lands
