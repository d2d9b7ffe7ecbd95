#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace madmm {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConditionFailed = 1,
  kExitDiverged = 2,
  kExitInputError = 3,  ///< I/O, schema or usage error
  kExitUnverified = 4,  ///< dense checks skipped above the dimension cap
  kExitNoFeasibleProbe = 5,
};

/// Runs one command. `args` excludes the program name. Machine-readable
/// output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace madmm
