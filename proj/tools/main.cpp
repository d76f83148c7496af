#include <iostream>
#include <string>
#include <vector>

#include "fpclean/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return fpclean::cli::run(args, std::cout, std::cerr);
}
