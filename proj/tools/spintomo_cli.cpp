#include <iostream>

#include "spintomo/cli.hpp"

int main(int argc, char** argv) { return spintomo::cli::run(argc, argv, std::cout, std::cerr); }
