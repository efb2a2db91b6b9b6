#pragma once

#include <stdexcept>
#include <string>

namespace meshmotion {

// Validation failures raised by library entry points use std::invalid_argument.
// The types below cover the remaining failure classes the CLI maps to exit codes.

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace meshmotion
