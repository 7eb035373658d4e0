#include <vector>

#include "entkit/cli.hpp"

int main(int argc, char** argv) {
  return entkit::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
