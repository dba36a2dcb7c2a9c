#include <iostream>
#include <string>
#include <vector>

#include "ksaqa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ksaqa::run_cli(args, std::cin, std::cout, std::cerr);
}
