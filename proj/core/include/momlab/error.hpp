#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace momlab {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// An iterative routine exhausted its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Parameters lie outside the region where a bound is defined (rho >= 1,
// alpha >= 2/L, ...).
class OutOfRegionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedProblem : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class NonStationaryTail : public Error {
 public:
  using Error::Error;
};

// Algebraically impossible state; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Wraps an oracle failure with the iteration at which it happened.
class IterationError : public Error {
 public:
  IterationError(std::size_t iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace momlab
