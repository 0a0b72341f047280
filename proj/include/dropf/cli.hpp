#pragma once

namespace dropf {

inline constexpr const char* kToolName = "dropf";
inline constexpr const char* kToolVersion = "0.1.0";

// Entry point behind the dropf binary. Exit codes: 0 success, 1 runtime or
// solver failure, 2 usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace dropf
