#pragma once

#include <stdexcept>
#include <string>

namespace lapcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, long expected, long got)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(got)),
        expected_(expected),
        got_(got) {}

  long expected() const noexcept { return expected_; }
  long got() const noexcept { return got_; }

 private:
  long expected_;
  long got_;
};

/// A matrix expected to be symmetric positive definite is not.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double smallest_eigenvalue)
      : Error(what + " is not positive definite (smallest eigenvalue " +
              std::to_string(smallest_eigenvalue) + ")"),
        smallest_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_; }

 private:
  double smallest_;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

/// Spectral precondition rho(Q^{1/2} M Q^{1/2}) < 1 of the Gaussian integral fails.
class ConditionViolated : public Error {
 public:
  explicit ConditionViolated(double eigenvalue)
      : Error("Gaussian integral precondition violated: eigenvalue " +
              std::to_string(eigenvalue) + " of Q^{1/2} M Q^{1/2} is not below 1"),
        eigenvalue_(eigenvalue) {}

  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

/// exp(-T Phi) is not integrable against the prior.
class DivergentIntegral : public Error {
 public:
  using Error::Error;
};

class MaxIterations : public Error {
 public:
  using Error::Error;
};

/// Newton stopped at a stationary point whose Hessian is not positive definite.
class IndefiniteHessianAtOptimum : public Error {
 public:
  IndefiniteHessianAtOptimum(double smallest_eigenvalue)
      : Error("stationary point of I has an indefinite Hessian (smallest eigenvalue " +
              std::to_string(smallest_eigenvalue) + ")"),
        smallest_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_; }

 private:
  double smallest_;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class UnknownModel : public Error {
 public:
  explicit UnknownModel(const std::string& name) : Error("unknown model '" + name + "'") {}
};

class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace lapcert
