#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mmchss {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kJ{0.0, 1.0};

/// Bad input to any operation (shape mismatch, out-of-range parameter, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerical pipeline (exit code 3 in the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A lifted system matrix was singular or too ill-conditioned to trust.
class SingularSystemError : public NumericalError {
 public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// A resonant controller was evaluated on (or numerically at) its pole.
class PoleAtResonanceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The perturbation response is too small to form an impedance ratio.
class DegenerateResponseError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The time-domain integrator produced a non-finite state.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double time_s)
      : NumericalError(what), time_s_(time_s) {}
  double time() const noexcept { return time_s_; }

 private:
  double time_s_;
};

}  // namespace mmchss
