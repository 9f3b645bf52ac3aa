#include <iostream>

#include "ctrepro/cli.hpp"

int main(int argc, char** argv) { return ctrepro::run_cli(argc, argv, std::cout, std::cerr); }
