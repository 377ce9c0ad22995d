#pragma once

#include <stdexcept>
#include <string>

namespace cardioflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable input file.
class ParseError : public Error {
public:
  using Error::Error;
};

/// An iterative solver stopped before reaching its tolerance.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

private:
  int iterations_;
  double residual_;
};

/// Failure inside a simulation phase, e.g. a non-finite solution.
class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace cardioflow
