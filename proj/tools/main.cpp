#include <iostream>

#include "mlocrisk/cli.hpp"

int main(int argc, char** argv) { return mlocrisk::run_cli(argc, argv, std::cout, std::cerr); }
