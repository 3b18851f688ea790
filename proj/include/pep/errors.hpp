#pragma once

#include <stdexcept>
#include <string>

namespace pep {

// Raised when a configuration value violates a module invariant. `key_path`
// is a JSON-pointer-like location ("/simulation/rho") or empty.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : std::invalid_argument(key_path.empty() ? what : key_path + ": " + what),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

// State-space or enumeration budget exceeded.
class BudgetError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Cross-checks that must agree did not (e.g. the three gradient procedures).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Quantity requested that is only defined for gradient rate families.
class NonGradientError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace pep
