#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kSolverError = 3 };

/// Runs the command-line tool; `args` excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gsr::cli
