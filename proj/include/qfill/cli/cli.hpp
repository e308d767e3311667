// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfill::cli {

inline constexpr const char *kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

/// Runs the command line `args` (without the program name). Results go to
/// `out`; failures are reported on `err` as one JSON object
/// {"error": kind, "message": ..., "row": ...}.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Manifest path for an output file or directory.
std::filesystem::path manifest_path_for(const std::filesystem::path &output, bool is_directory);

} // namespace qfill::cli
