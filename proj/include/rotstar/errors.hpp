#ifndef ROTSTAR_ERRORS_HPP
#define ROTSTAR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rotstar {

// Invalid parameter values (gamma out of range, negative l, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure of an iterative or adaptive method.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The linearized operator is numerically singular.
class DegenerateOperator : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace rotstar

#endif
