#pragma once

#include <stdexcept>
#include <string>

namespace coopsense {

/// Raised when an allocation or instance cannot be served within the energy
/// budget, e.g. a ratio that sits at or beyond the Shannon energy floor.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method hit its iteration cap before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bracketing root finder was handed an interval without a sign change.
class BracketError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace coopsense
