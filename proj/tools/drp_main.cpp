#include <iostream>

#include "drp/cli.hpp"

int main(int argc, char** argv) { return drp::cli::run_cli(argc, argv, std::cout, std::cerr); }
