#include <iostream>

#include "flowlhd/cli/app.hpp"

int main(int argc, char** argv) {
  return flowlhd::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
