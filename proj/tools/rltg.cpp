#include <iostream>
#include <string>
#include <vector>

#include "rltg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rltg::cli::run_subcommand(args, std::cout, std::cerr);
}
