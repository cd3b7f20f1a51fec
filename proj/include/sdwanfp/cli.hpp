#ifndef SDWANFP_CLI_HPP
#define SDWANFP_CLI_HPP

namespace sdwanfp {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace sdwanfp

#endif  // SDWANFP_CLI_HPP
