#include <string>
#include <vector>

#include "citekit/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return citekit::cli::run(args);
}
