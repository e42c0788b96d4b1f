#pragma once

#include <iosfwd>

namespace fenrich::pipeline {

// Exit codes of the command line.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitMissing = 2;
inline constexpr int kExitHashMismatch = 3;

// Runs `fenrich <subcommand> ...`. Results go to `out`; failures are
// reported on `err` as one JSON record {"error": {...}}. `in` feeds the
// streaming reward mode.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace fenrich::pipeline
