#pragma once

#include <stdexcept>
#include <string>

namespace socrm {

/// A knob or index outside the descriptor's range.
class BoundsError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Numerical failure inside a model (non-finite input, singular system, ...).
class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A checked invariant failed at run time; the CLI maps this to exit code 2.
class InvariantViolation : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed; the CLI maps this to exit code 3.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace socrm
