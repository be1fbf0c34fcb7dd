#include "igs/cli.hpp"

int main(int argc, char** argv) { return igs::cli::main(argc, argv); }
