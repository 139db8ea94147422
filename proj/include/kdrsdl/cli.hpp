#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdrsdl::cli {

/// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< solver or I/O failure during a run
inline constexpr int kExitUsage = 2;    ///< bad flags or unusable inputs

/// Runs one subcommand (synth, decompose, rpca, bgsub, denoise, eval).
/// `args` excludes the program name. Diagnostics go to `err`, progress to
/// `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sorted list of paths matching a shell glob pattern.
std::vector<std::string> expand_glob(const std::string& pattern);

}  // namespace kdrsdl::cli
