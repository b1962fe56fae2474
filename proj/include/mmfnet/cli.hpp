#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mmfnet::cli {

/// Stable process exit codes.
enum ExitCode : int {
    ok = 0,
    config_error = 1,
    data_error = 2,
    diverged = 3,
    selftest_failed = 4,
};

/// Runs the command line `args` (args[0] is the program name). Human
/// summaries go to `out`, diagnostics to `err`, machine output to files under
/// --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmfnet::cli
