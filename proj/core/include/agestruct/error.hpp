#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace agestruct {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a parameter or function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for the given configuration (e.g. R'(x) in linear mode).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class SingularFitError : public Error {
 public:
  using Error::Error;
};

/// Root bracket could not be established.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size collapsed below the underflow threshold.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// The integrated state left the admissible (nonnegative) region.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A query lies outside the range covered by a trajectory or history.
class RangeError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_update)
      : Error(what), last_update_(last_update) {}
  double last_update() const noexcept { return last_update_; }

 private:
  double last_update_;
};

/// QR iteration failed; carries the eigenvalues found before the failure.
class EigenvalueError : public Error {
 public:
  EigenvalueError(const std::string& what, std::vector<std::complex<double>> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<std::complex<double>>& partial_spectrum() const noexcept { return partial_; }

 private:
  std::vector<std::complex<double>> partial_;
};

}  // namespace agestruct
