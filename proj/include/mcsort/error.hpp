#pragma once

#include <stdexcept>
#include <string>

namespace mcsort {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: out-of-range performances, malformed files, invalid
/// credibility vectors, bad parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownLevelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical subproblem could not be solved (infeasible QP, iteration cap
/// on a problem that must converge).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcsort
