#include <iostream>

#include "ffcbf/cli.hpp"

int main(int argc, char** argv) { return ffcbf::cli::main_entry(argc, argv, std::cout, std::cerr); }
