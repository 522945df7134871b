#include "replab/cli.hpp"

int main(int argc, char** argv) { return replab::cli_main(argc, argv); }
