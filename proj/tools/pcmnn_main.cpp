#include <iostream>
#include <string>
#include <vector>

#include "pcmnn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pcmnn::cli::run(args, std::cout, std::cerr);
}
