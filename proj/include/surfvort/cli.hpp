#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace surfvort::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kTopologyRejected = 2,
  kNotConverged = 3,
  kCollision = 4,
};

/// Entry point of the `surfvort` tool. `args` excludes the program name.
/// Diagnostics go to `err`; commands that print data use `out`.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace surfvort::cli
