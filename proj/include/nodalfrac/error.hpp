#pragma once

#include <stdexcept>
#include <string>

namespace nodalfrac {

/// Raised when caller input violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces a result that contradicts a proven
/// structural property (e.g. a degenerate Perron eigenvalue), which points at
/// broken preconditions or a failed discretization rather than bad input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace nodalfrac
