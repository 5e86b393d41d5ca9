#pragma once

#include <stdexcept>
#include <string>

namespace snk {

/// Malformed or inconsistent input (mesh files, map files, config).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver failure, NaN/Inf in the optimization, degenerate geometry in a
/// numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snk
