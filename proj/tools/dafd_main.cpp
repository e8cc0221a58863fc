#include <iostream>
#include <string>
#include <vector>

#include "dafd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dafd::cli::dispatch(args, std::cout, std::cerr);
}
