#include <string>
#include <vector>

#include "cogscore/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cogscore::run_cli(args);
}
