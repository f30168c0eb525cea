#include <iostream>

#include "vbcar/cli.hpp"

int main(int argc, char** argv) { return vbcar::cli::run(argc, argv, std::cout, std::cerr); }
