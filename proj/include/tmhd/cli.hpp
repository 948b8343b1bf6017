#pragma once

#include <string>
#include <vector>

namespace tmhd {

/// Exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitUsage = 2 };

/// Runs one subcommand (verify, run, twin, ergodic, order, apriori, feller).
/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, char** argv);

}  // namespace tmhd
