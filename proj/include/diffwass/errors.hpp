#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffwass {

/// Bad input: wrong dimension, non-positive time, misaligned vectors.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A request would exceed the memory or size budget. `required()` is the
/// size the request would have produced (or an estimate when noted).
class CapacityError : public std::length_error {
 public:
  CapacityError(const std::string& what, std::size_t required)
      : std::length_error(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// An iterative solver failed to reach its tolerance. `residual()` carries the
/// last measured violation.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A requested series is infinite (r = 0 with d >= 4).
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration validation failure; lists every violation found.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace diffwass
