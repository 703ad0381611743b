#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stq {

inline constexpr const char* tool_version = "0.1.0";

/// Inclusive grid `start:stop:step` with n = floor((stop - start)/step + 1e-9) + 1
/// points; a single number is a one-point grid.
std::vector<double> parse_grid(const std::string& text);

/// Runs one `stq` invocation. Exit status: 0 ok, 2 usage/input errors,
/// 3 physics diagnostics, 1 internal faults. Diagnostics go to `err` as one
/// JSON line.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stq
