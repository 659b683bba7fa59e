#pragma once

#include <ostream>

namespace albench {

/// Environment variable that replaces the default output root ("results").
/// An explicit --out still wins.
inline constexpr const char* kOutputRootEnv = "ALBENCH_OUT";

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

/// Entry point of the albench tool. Subcommands: run, budget, report,
/// variance, list-datasets.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace albench
