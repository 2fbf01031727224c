#include <iostream>

#include "actorsets/commands.hpp"

int main(int argc, char** argv) {
  return actorsets::run_cli(argc, argv, std::cout, std::cerr);
}
