#include <iostream>
#include <string>
#include <vector>

#include "ltvstream/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ltvstream::run_cli(args, std::cout, std::cerr);
}
