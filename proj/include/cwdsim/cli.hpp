#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cwdsim {

// Process exit codes; stable across versions.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInvariant = 4;

// Runs the command line `args` (without the program name). Messages go to
// `out` and `err`; the return value is one of the exit codes above.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cwdsim
