#pragma once

#include <stdexcept>
#include <string>

namespace logdp {

/// Argument outside the mathematical domain of a scalar map (negative t, r <= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Structurally invalid input: bad mesh sizes, exponent fields violating 1 < p <= q, ...
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method gave up (bracket not found, max iterations, collapse to zero).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file could not be parsed or violates a named assumption.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace logdp
