#include <iostream>

#include "fractalforge/cli.hpp"

int main(int argc, char** argv) { return ff::run_cli(argc, argv, std::cout, std::cerr); }
