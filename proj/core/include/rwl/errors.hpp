#pragma once

#include <stdexcept>
#include <string>

namespace rwl {

// Bad argument values or shapes (node ids out of range, dimension mismatch, ...).
using InvalidArgument = std::invalid_argument;

// A random graph family could not produce a connected sample.
class ConstructionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Power iteration did not reach the requested residual.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation is not defined for the requested model (e.g. closed-form optimum
// for logistic regression).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment/config validation. The message lists every offending field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwl
