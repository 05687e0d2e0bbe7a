#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pnb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`, diagnostics to `err`; returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pnb::cli
