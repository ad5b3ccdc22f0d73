#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlab {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterated scheme leaves the finite doubles.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dlab
