// Placeholder main while the library is under construction; the real CLI is
// wired up in a later commit of this build.
int main() { return 0; }
