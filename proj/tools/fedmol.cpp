#include "fedmol/cli.hpp"

int main(int argc, char** argv) { return fedmol::cli_main(argc, argv); }
