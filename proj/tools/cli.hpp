#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robust::cli {

enum ExitCode : int { ok = 0, input_error = 2, degenerate = 3, non_convergence = 4 };

/// Runs the command line `args` (without the program name). Diagnostics go
/// to `err`, the list of written files to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robust::cli
