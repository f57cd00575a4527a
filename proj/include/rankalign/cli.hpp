#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rankalign {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point behind the `rankalign` binary. `args` excludes the program
// name. Data goes to files or `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rankalign
