#include <iostream>

#include "stagerl/cli.hpp"

int main(int argc, char** argv) { return stagerl::run_cli(argc, argv, std::cout, std::cerr); }
