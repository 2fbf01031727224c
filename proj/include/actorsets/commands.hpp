#pragma once

#include <ostream>

namespace actorsets {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitInfeasible = 3;

// Subcommands: assign, score, eval, synth, train. Errors are reported as a
// single "error[<code>]: <message>" line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace actorsets
