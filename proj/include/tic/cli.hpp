#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tic {

/// Exit codes of the batch front-end.
enum ExitCode : int { kExitOk = 0, kExitSolver = 1, kExitConfig = 2, kExitVerdict = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace tic
