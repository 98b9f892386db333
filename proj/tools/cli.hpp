#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gem::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kComputeFailure = 1;
inline constexpr int kConfigFailure = 2;

/// Runs one command line (without the program name). Reports go to out,
/// diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gem::cli
