#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcmnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `pcmnn <subcommand> [options]`. `args[0]` is the program name.
/// Failures print one line `pcmnn: error kind=<usage|data|numerical> code=<n>: <reason>`
/// on `err` and return the matching exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcmnn::cli
