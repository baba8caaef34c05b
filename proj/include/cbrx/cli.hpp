#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbrx::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kUsageError = 2 };

// Runs one command line (args[0] is the program name). Documents go to
// `out`, diagnostics to `err`; "-" as an input path reads `in`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace cbrx::cli
