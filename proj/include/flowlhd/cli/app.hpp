#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flowlhd::cli {

// Parses and runs one command line (without the program name). Returns the
// process exit code: 0 success, 1 internal/numerics failure, 2 usage,
// config, data or format error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowlhd::cli
