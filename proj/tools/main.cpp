#include <iostream>
#include <string>
#include <vector>

#include "pathflow/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return pathflow::cli::run(args, std::cout, std::cerr);
}
