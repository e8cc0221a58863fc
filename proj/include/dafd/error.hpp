#pragma once

#include <stdexcept>
#include <string>

namespace dafd {

// Malformed or missing input data (files, rows, samples).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration value violates its documented contract.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure during training or evaluation (NaN/Inf, shape mismatch).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dafd
