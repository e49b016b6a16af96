#include <iostream>

#include "nowpac/cli.hpp"

int main(int argc, char** argv) { return nowpac::cli_main(argc, argv, std::cout, std::cerr); }
