#include <iostream>

#include "singvolt_cli/cli.hpp"

int main(int argc, char** argv) { return singvolt::cli::run(argc, argv, std::cout, std::cerr); }
