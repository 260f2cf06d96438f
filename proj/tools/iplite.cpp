#include <iostream>

#include "iplite/cli.hpp"

int main(int argc, char** argv) { return iplite::run_command(argc, argv, std::cout, std::cerr); }
