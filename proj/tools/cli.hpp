#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hdrexp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kDataContract = 3,
  kUnsolvable = 4,
  kAllTilesRejected = 5,
};

/// Runs one `hdrexp` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdrexp::cli
