#pragma once

#include <ostream>

namespace kstcp {

/// Exit codes of the `kstcp` command.
enum ExitCode : int { kExitOk = 0, kExitSolverFailure = 1, kExitUsage = 2 };

/**
 * Entry point of the `kstcp` command, with the output streams injected so
 * tests can drive it in-process. Subcommands: solve, classify, bench, gen.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kstcp
