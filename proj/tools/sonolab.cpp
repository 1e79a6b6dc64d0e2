#include <iostream>

#include "sonolab/cli.hpp"

int main(int argc, char** argv) { return sonolab::cli::run_cli(argc, argv, std::cout, std::cerr); }
