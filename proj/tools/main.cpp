#include <iostream>

#include "zoibmed/cli.hpp"

int main(int argc, char** argv) {
  return zoibmed::cli::run(argc, argv, std::cout, std::cerr);
}
