#include <iostream>
#include <string>
#include <vector>

#include "diplo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return diplo::cli::run(args, std::cout, std::cerr);
}
