#include <iostream>

#include "faultscope/commands.hpp"

int main(int argc, char** argv) {
  return faultscope::run_cli(argc, argv, std::cout, std::cerr);
}
