#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace mwm {

/// Inconsistent matrix or signal dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside its admissible range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values or failed numerical kernels.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularFeedthroughError : public std::invalid_argument {
 public:
  explicit SingularFeedthroughError(double condition)
      : std::invalid_argument(message(condition)), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  static std::string message(double condition) {
    std::ostringstream os;
    os << "singular feedthrough: D has condition number " << condition;
    return os.str();
  }
  double condition_;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mwm
