#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lcgmm::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lcgmm::cli
