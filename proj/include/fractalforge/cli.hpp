#pragma once

#include <iosfwd>

namespace ff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidScene = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `fractalforge` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ff
