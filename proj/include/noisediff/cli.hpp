// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace noisediff {

/// Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_numerical = 2;

/// Entry point of the `noisediff` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace noisediff
