#pragma once

#include <stdexcept>
#include <string>

namespace twodesign {

/// Invalid user-facing configuration (bad family name, impossible parameters).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested error target was not reached within the step budget.
class UnreachedError : public std::runtime_error {
 public:
  UnreachedError(const std::string& what, int last_step, double last_error)
      : std::runtime_error(what), last_step_(last_step), last_error_(last_error) {}
  int last_step() const { return last_step_; }
  double last_error() const { return last_error_; }

 private:
  int last_step_;
  double last_error_;
};

/// Two independent reductions of the same quantity disagreed.
class OracleMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twodesign
