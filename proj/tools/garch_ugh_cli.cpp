#include "garch_ugh/cli.hpp"

int main(int argc, char** argv) { return garch_ugh::cli::run(argc, argv); }
