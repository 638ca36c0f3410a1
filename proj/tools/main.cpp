#include <iostream>

#include "fids/cli/commands.hpp"

int main(int argc, char** argv) { return fids::cli::run_app(argc, argv, std::cout, std::cerr); }
