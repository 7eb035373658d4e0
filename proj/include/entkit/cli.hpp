#pragma once

#include <string>
#include <vector>

namespace entkit::cli {

// Runs one subcommand. args excludes the program name. Exit codes: 0 ok,
// 2 usage, 3 missing input, 4 validation failure, 5 internal. Failures also
// print a single machine-readable JSON line to stderr.
int run(const std::vector<std::string>& args);

}  // namespace entkit::cli
