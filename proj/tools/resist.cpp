#include <iostream>

#include "resist/cli.hpp"

int main(int argc, char** argv) { return resist::cli::run_cli(argc, argv, std::cout, std::cerr); }
