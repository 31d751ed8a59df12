#pragma once

#include <stdexcept>
#include <string>

namespace fedfilter {

// Caller broke a documented precondition (length mismatch, negative
// parameter, non-finite input).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// LMS produced non-finite weights; the step size is too large for the data.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset missing, unreadable or malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration is inconsistent or infeasible for the data.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fedfilter
