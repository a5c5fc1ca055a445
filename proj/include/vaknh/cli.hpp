#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vaknh::cli {

enum ExitCode : int { ok = 0, usage = 1, failed_check = 2, numeric = 3 };

/// Runs one command line (without the program name). Normal output goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vaknh::cli
