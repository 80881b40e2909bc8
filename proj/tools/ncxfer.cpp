#include <iostream>

#include "ncxfer/cli.hpp"

int main(int argc, char** argv) { return ncxfer::run_cli(argc, argv, std::cout, std::cerr); }
