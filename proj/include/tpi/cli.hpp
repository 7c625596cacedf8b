#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tpi::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kDomainFailure = 1, kInputFailure = 2, kNonConvergence = 3 };

/// Runs one subcommand. args excludes the program name. Reports go to `out`
/// (or --out), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tpi::cli
