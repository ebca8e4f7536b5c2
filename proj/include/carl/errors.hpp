#pragma once

#include <stdexcept>
#include <string>

namespace carl {

// Bad or inconsistent user input (config files, parameter structs).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at run time (stability guard, NaN divergence,
// bracketing failure). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::string diagnostic = {})
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}

  // Optional machine-readable state dump (JSON text) for post-mortems.
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string diagnostic_;
};

}  // namespace carl
