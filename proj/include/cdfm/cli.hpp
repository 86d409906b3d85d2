#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdfm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsageError = 2;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to `err`
/// as one line; results and key=value records go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 of a file's bytes as lowercase hex.
std::string sha256_file(const std::string& path);

}  // namespace cdfm::cli
