#include <cstdlib>
#include <iostream>

#include "quasistat/cli/commands.hpp"

int main(int argc, char** argv) {
  return quasistat::cli::run_cli(argc, argv, std::getenv("QUASISTAT_SEED"), std::cout,
                                 std::cerr);
}
