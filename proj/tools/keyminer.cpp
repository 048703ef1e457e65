#include <iostream>

#include "keyminer/cli.hpp"

int main(int argc, char** argv) {
  return keyminer::run_cli(argc, argv, std::cout, std::cerr, std::cin);
}
