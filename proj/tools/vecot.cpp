#include <iostream>

#include "vecot/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return vecot::io::run_cli(args, std::cout, std::cerr);
}
