#include <string>
#include <vector>

#include "clothfit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return clothfit::run_cli(args);
}
