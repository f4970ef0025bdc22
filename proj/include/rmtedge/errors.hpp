#pragma once

#include <stdexcept>
#include <string>

namespace rmtedge {

// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to converge or produced an unusable result
// (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the four-moment fallback solver when it cannot produce a valid
// law; kept distinct from infeasible inputs, which are std::invalid_argument.
class SolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rmtedge
