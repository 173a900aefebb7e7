#pragma once

#include <stdexcept>
#include <string>

namespace cellavg {

// Base error for all library failures (bad inputs, non-convergence, I/O).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Errors caused by malformed user input (CLI flags, config files, missing
// input files).  The CLI maps these to exit code 2, everything else to 1.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace cellavg
