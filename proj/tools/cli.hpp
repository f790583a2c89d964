#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace momlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidationFailed = 2, kRuntime = 3 };

/// Runs the momlab command line with `args` (excluding the program name).
/// Human-readable output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace momlab::cli
