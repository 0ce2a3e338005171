#include <iostream>

#include "bitwave/cli.hpp"

int main(int argc, char** argv) {
  return bitwave::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
