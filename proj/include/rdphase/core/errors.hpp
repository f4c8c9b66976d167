#pragma once
#include <stdexcept>
#include <string>

namespace rdphase {

// Precondition violations use std::invalid_argument directly.

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a proved invariant fails; always an implementation bug.
struct InternalInvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace rdphase
