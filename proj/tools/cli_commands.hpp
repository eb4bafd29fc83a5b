#pragma once

#include <string>
#include <vector>

namespace tellipsoid::cli {

// Parses argv and dispatches to the rank/simulate/evaluate/covlab
// subcommands. Exit codes: 0 success, 1 validation failure, 2 I/O failure,
// 3 tolerance failure (covlab only).
int run_cli(int argc, const char* const* argv);

// Convenience overload for tests.
int run_cli(const std::vector<std::string>& args);

} // namespace tellipsoid::cli
