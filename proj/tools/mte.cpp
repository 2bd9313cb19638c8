#include "mte/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mte::run_cli(argc, argv, std::cout, std::cerr); }
