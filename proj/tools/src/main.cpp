#include <iostream>

#include "relaxoc_cli/cli.hpp"

int main(int argc, char** argv) { return relaxoc::cli::run_main(argc, argv, std::cout, std::cerr); }
