#include <iostream>

#include "stochar/cli.hpp"

int main(int argc, char** argv) { return stochar::cli::run(argc, argv, std::cout, std::cerr); }
