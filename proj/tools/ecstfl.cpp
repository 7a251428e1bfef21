#include "ecstfl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ecstfl::run_cli(argc, argv, std::cout, std::cerr); }
