#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cveval {

// Invalid argument or parameter outside the support of a density.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Matrix factorization failure; carries the index of the failing pivot.
class DecompositionError : public std::runtime_error {
 public:
  DecompositionError(const std::string& what, std::size_t pivot)
      : std::runtime_error(what + " (failing pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// Iterative method failed to converge, or a NaN surfaced in a chain.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model/data/config combination that cannot be run.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input file.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cveval
