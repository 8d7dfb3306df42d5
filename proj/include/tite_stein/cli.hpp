#pragma once

#include <iosfwd>

namespace tite_stein {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNoObd = 3;

/// Runs the `tite-stein` command line (simulate, decision-table, finalize,
/// validate, serve). Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tite_stein
