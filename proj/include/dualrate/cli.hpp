#pragma once

#include "dualrate/error.hpp"

#include <string>

namespace dualrate {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int usage = 2;
inline constexpr int io = 3;
inline constexpr int validation = 4;
inline constexpr int convergence = 5;
inline constexpr int calibration = 6;
inline constexpr int sequencing = 7;
inline constexpr int incomplete_window = 8;
inline constexpr int no_antecedent = 9;
}  // namespace exit_code

int exit_code_for(ErrorCategory category);

/// Single line: `error category=<name> key=<key> message="<text>"`.
std::string error_line(std::string_view category, std::string_view key, std::string_view message);

/// Entry point of the dualrate tool. Returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace dualrate
