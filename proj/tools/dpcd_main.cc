#include <iostream>
#include <string>
#include <vector>

#include "dpcd/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dpcd::cli_main(args, std::cout, std::cerr);
}
