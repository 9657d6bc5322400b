#include <string>
#include <vector>

#include "dialanno/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dialanno::run_cli(std::move(args));
}
