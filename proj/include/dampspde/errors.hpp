#pragma once

#include <stdexcept>
#include <string>

namespace dampspde {

/// Invalid parameters or inconsistent configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Geometric precondition violated (e.g. a point on the boundary).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Non-finite values during evaluation or time stepping.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dampspde
