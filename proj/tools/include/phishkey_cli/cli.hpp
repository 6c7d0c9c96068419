#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phishkey::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDataError = 3, kModelError = 4 };

/// Runs the phishkey command line. `args` excludes the program name. Normal
/// output goes to `out`, diagnostics and progress to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phishkey::cli
