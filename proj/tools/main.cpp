#include <iostream>

#include "dglcb/cli.hpp"

int main(int argc, char** argv) { return dglcb::run_cli(argc, argv, std::cout, std::cerr); }
