#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mslab {

/// Precondition violations: bad shapes, out-of-range parameters, non-finite input.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sampler or search could not produce what was asked within its budget.
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampler exceeded its attempt cap.
class SamplingBudgetError : public FeasibilityError {
 public:
  SamplingBudgetError(const std::string& what, std::uint64_t attempts)
      : FeasibilityError(what), attempts_(attempts) {}

  std::uint64_t attempts() const noexcept { return attempts_; }

 private:
  std::uint64_t attempts_;
};

}  // namespace mslab
