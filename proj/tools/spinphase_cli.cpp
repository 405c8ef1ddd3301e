int main() { return 0; }  // placeholder until the command layer lands
