#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace statenet::cli {

// Runs the statenet command line with `args` (without the program name).
// Returns the process exit code: 0 on success, 1 on a runtime error, other
// nonzero values on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr const char* kRunsDirEnv = "STATENET_RUNS_DIR";

}  // namespace statenet::cli
