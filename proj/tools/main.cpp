#include <iostream>

#include "thinlayer/cli.hpp"

int main(int argc, char** argv) { return thinlayer::run_cli(argc, argv, std::cout, std::cerr); }
