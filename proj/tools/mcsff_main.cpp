#include <iostream>
#include <string>
#include <vector>

#include "mcsff/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mcsff::cli::run_cli(args, std::cout, std::cerr);
}
