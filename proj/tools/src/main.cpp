#include <iostream>

#include "bifrank_cli/commands.hpp"

int main(int argc, char** argv) {
  return bifrank::cli::main_entry(argc, argv, std::cout, std::cerr);
}
