#pragma once

#include <stdexcept>
#include <string>

namespace waoi {

// Configuration / input errors (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain errors: infeasibility, assumption failures, non-convergence
// (CLI exit code 1).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace waoi
