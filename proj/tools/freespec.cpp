#include <iostream>

#include "freespec/cli.hpp"

int main(int argc, char** argv) { return freespec::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
