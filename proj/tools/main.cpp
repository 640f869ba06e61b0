#include <iostream>

#include "underreport/cli.hpp"

int main(int argc, char** argv) {
  return underreport::cli::main(argc, argv, std::cout, std::cerr);
}
