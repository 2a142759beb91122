#include <iostream>

#include "bcl/cli.hpp"

int main(int argc, char** argv) { return bcl::run_cli(argc, argv, std::cout, std::cerr); }
