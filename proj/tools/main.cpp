#include <iostream>
#include <string>
#include <vector>

#include "symfs/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return symfs::cli::run(args, std::cout, std::cerr);
}
