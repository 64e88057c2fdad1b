#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfboot::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kData = 3, kNumerical = 4 };

/// Runs the command line `args` (without the program name). Results go to
/// `out`, diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lfboot::cli
