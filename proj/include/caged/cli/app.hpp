#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace caged::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitRuntime = 2,
  kExitDiverged = 3,
};

/// Entry point shared by the `caged` binary and the tests. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace caged::cli
