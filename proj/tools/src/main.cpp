#include <iostream>

#include "simgroup_cli/cli.hpp"

int main(int argc, char** argv) {
  simgroup::cli::tune_allocator();
  return simgroup::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
