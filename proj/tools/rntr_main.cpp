#include <iostream>

#include "rntr/cli.hpp"

int main(int argc, char** argv) { return rntr::cli::run(argc, argv, std::cout, std::cerr); }
