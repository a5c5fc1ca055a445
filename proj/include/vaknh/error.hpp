#pragma once

#include <stdexcept>
#include <string>

namespace vaknh {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input: expression syntax, system files, candidate files.
class InputError : public Error {
public:
  using Error::Error;
};

// Failures that come from the numbers rather than the input text:
// singular matrices, domain errors, integrator breakdown.
class NumericError : public Error {
public:
  using Error::Error;
};

class UnboundVariableError : public InputError {
public:
  explicit UnboundVariableError(std::string name)
      : InputError("unbound variable '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

class DomainError : public NumericError {
public:
  DomainError(const std::string& what, std::string subexpression)
      : NumericError(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}
  const std::string& subexpression() const noexcept { return subexpression_; }

private:
  std::string subexpression_;
};

class SingularMatrixError : public NumericError {
public:
  SingularMatrixError(const std::string& what, double det)
      : NumericError(what), det_(det) {}
  double det() const noexcept { return det_; }

private:
  double det_;
};

// Operation requires a system whose constraints are verified linear in the velocities.
class LinearityError : public InputError {
public:
  using InputError::InputError;
};

}  // namespace vaknh
