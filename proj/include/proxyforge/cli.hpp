#pragma once

namespace proxyforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;

/// Entry point of the `proxyforge` tool: train, eval, gradcheck, complexity.
/// Returns the process exit code.
int run(int argc, const char* const* argv);

/// Applies PROXYFORGE_LOG (trace, debug, info, warn, error, critical, off).
void configure_logging();

}  // namespace proxyforge::cli
