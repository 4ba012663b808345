#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace swarmopt::cli {

// Exit codes of every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kBadInput = 1;    // parse or validation error
inline constexpr int kNoSolution = 2;  // nothing feasible, or verification failed
inline constexpr int kInternal = 3;

/// Runs `swarmopt <args...>` (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swarmopt::cli
