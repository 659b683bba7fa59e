#include <iostream>

#include "albench/cli.hpp"

int main(int argc, char** argv) { return albench::run_cli(argc, argv, std::cout, std::cerr); }
