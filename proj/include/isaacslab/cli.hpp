#pragma once

// Batch entry point: scenario file + subcommand -> CSV artifacts and a
// manifest.json listing every output with its SHA-256.
//
// Exit codes: 0 success (all checks PASS), 2 some check FAILed,
// 1 usage or configuration error.

#include <iosfwd>
#include <string>
#include <vector>

namespace isaacslab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;

inline constexpr const char* kVersion = "0.1.0";

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Lower-case hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

}  // namespace isaacslab::cli
