#include <iostream>

#include "kstcp/cli.hpp"

int main(int argc, char** argv) { return kstcp::run_cli(argc, argv, std::cout, std::cerr); }
