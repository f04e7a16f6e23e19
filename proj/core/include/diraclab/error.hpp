#pragma once

#include <stdexcept>
#include <string>

namespace diraclab {

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel (eigensolver, fit) cannot produce a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by analysis routines that are handed too few usable data points.
class InsufficientData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Raised when configuration text or flags cannot be turned into a run.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Raised when an output file cannot be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diraclab
