#include <iostream>

#include "iscm/cli/runner.hpp"

int main(int argc, char **argv) { return iscm::cli::run(argc, argv, std::cout, std::cerr); }
