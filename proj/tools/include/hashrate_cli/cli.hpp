#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hashrate::cli {

/// Exit codes of run().
inline constexpr int exit_ok = 0;
inline constexpr int exit_data_error = 1;
inline constexpr int exit_usage_error = 2;

/// Entry point of the hashrate tool. `args` excludes the program name.
/// Tables go to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

} // namespace hashrate::cli
