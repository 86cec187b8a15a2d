#pragma once

#include <stdexcept>
#include <string>

namespace lsmfg {

/// Raised when the noise/input structure admits no scalar lambda with
/// lambda * B R^-1 B^T = nu; the Cole-Hopf linearization does not apply.
class NotLinearizable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The explicit scheme refuses to run outside its stability region.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(const std::string& what, double lhs)
      : std::runtime_error(what), lhs_(lhs) {}
  double lhs() const noexcept { return lhs_; }

 private:
  double lhs_;
};

/// A guarantee of the scheme (positivity, finiteness) was broken at runtime.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lsmfg
