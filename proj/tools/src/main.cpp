#include <iostream>

#include "almlab_cli/cli.hpp"

int main(int argc, char** argv) { return almlab::cli::main_entry(argc, argv, std::cout, std::cerr); }
