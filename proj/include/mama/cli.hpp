#pragma once

#include <iosfwd>

namespace mama::cli {

/// Exit codes of `mama`.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kModelError = 2,
    kNotConverged = 3,
    kZeno = 4,
    kVerifyFailed = 5,
};

/// Runs the command line `argv` (argv[0] is the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mama::cli
