#include <iostream>

#include "fns/cli.hpp"

int main(int argc, char** argv) { return fns::run_cli(argc, argv, std::cout, std::cerr); }
