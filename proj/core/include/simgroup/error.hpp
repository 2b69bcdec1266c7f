#pragma once

#include <stdexcept>
#include <string>

namespace simgroup {

// Malformed input data or a violated precondition on data (bad file, shape
// mismatch, out-of-range label). The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments. The CLI maps these to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape mismatch inside a computation graph.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace simgroup
