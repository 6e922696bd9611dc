#include <iostream>

#include "cpsim/cli.hpp"

int main(int argc, char** argv) { return cpsim::cli_main(argc, argv, std::cout, std::cerr); }
