#include "acflab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return acflab::run_cli(argc, argv, std::cout, std::cerr); }
