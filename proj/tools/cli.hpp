#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace uatrust::cli {

// Exit codes.
inline constexpr int kExitSecure = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitVulnerable = 2;

// args excludes the program name. Long-running verbs return early once *interrupted is set.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* interrupted = nullptr);

}  // namespace uatrust::cli
