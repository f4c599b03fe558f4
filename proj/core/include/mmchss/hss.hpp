#pragma once

// Harmonic-domain machinery for linear time-periodic systems.
//
// A T-periodic signal x(t) is represented by its Fourier coefficients
// X_k, k = -h..h, with x(t) = sum_k X_k exp(j k w1 t). A product a(t) x(t)
// maps to a block-Toeplitz operator acting on the stacked coefficients,
// and d/dt maps to a diagonal frequency-shift operator. Stacks are ordered
// [X_-h, ..., X_0, ..., X_h], each block holding `dim` state components.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mmchss/types.hpp"

namespace mmchss::hss {

inline constexpr int kMaxOrder = 64;

/// Fourier coefficients of one scalar periodic signal, k = -h..h.
class HarmonicCoeffs {
 public:
  HarmonicCoeffs(int order, double omega, std::vector<Complex> coeffs);
  static HarmonicCoeffs zeros(int order, double omega);

  int order() const { return order_; }
  double omega() const { return omega_; }
  std::span<const Complex> values() const { return coeffs_; }

  /// Coefficient at harmonic k; zero for |k| > order.
  Complex operator[](int k) const;
  void set(int k, Complex value);

  bool is_conjugate_symmetric(double rel_tol = 1e-12) const;

 private:
  int order_;
  double omega_;
  std::vector<Complex> coeffs_;
};

/// Stacked coefficients of a `dim`-dimensional periodic state.
class HarmonicVector {
 public:
  HarmonicVector(int order, int dim);
  HarmonicVector(int order, int dim, ComplexVector data);

  int order() const { return order_; }
  int dim() const { return dim_; }
  int harmonics() const { return 2 * order_ + 1; }
  Eigen::Index size() const { return data_.size(); }

  const ComplexVector& data() const { return data_; }

  /// Component i at harmonic k; zero for |k| > order.
  Complex operator()(int k, int i) const;
  void set(int k, int i, Complex value);

  HarmonicCoeffs component(int i, double omega) const;

  /// Re-truncate (or zero-pad) to another order.
  HarmonicVector truncated(int order) const;

  bool is_conjugate_symmetric(double rel_tol = 1e-9) const;

 private:
  Eigen::Index offset(int k) const { return static_cast<Eigen::Index>(k + order_) * dim_; }

  int order_;
  int dim_;
  ComplexVector data_;
};

/// Dense linear operator on harmonic stacks, viewed as (2h+1)x(2h+1) blocks
/// of size dim x dim. Block (r, c) couples source harmonic c-h into
/// destination harmonic r-h.
class HarmonicOperator {
 public:
  HarmonicOperator(int order, int block_size);
  HarmonicOperator(int order, int block_size, ComplexMatrix dense);

  int order() const { return order_; }
  int block_size() const { return block_size_; }
  const ComplexMatrix& dense() const { return dense_; }

  /// Block coupling source harmonic `col_k` into destination `row_k`.
  ComplexMatrix block(int row_k, int col_k) const;
  Complex entry(int row_k, int row_i, int col_k, int col_i) const;
  void add_to_entry(int row_k, int row_i, int col_k, int col_i, Complex value);

  HarmonicVector apply(const HarmonicVector& x) const;

  HarmonicOperator& operator+=(const HarmonicOperator& other);
  friend HarmonicOperator operator+(HarmonicOperator lhs, const HarmonicOperator& rhs) {
    lhs += rhs;
    return lhs;
  }

 protected:
  Eigen::Index index(int k, int i) const {
    return static_cast<Eigen::Index>(k + order_) * block_size_ + i;
  }

  int order_;
  int block_size_;
  ComplexMatrix dense_;
};

/// Block-Toeplitz realization of a periodic matrix a(t) = sum_k A_k e^{jkw1t}:
/// block (r, c) = A_{r-c} for |r-c| <= h, zero otherwise.
class ToeplitzOperator : public HarmonicOperator {
 public:
  /// Coefficient A_k; zero matrix when absent or |k| > h.
  ComplexMatrix coefficient(int k) const;
  const std::map<int, ComplexMatrix>& coefficients() const { return coeffs_; }

 private:
  friend ToeplitzOperator build_toeplitz(const std::map<int, ComplexMatrix>&, int, int);
  ToeplitzOperator(int order, int block_size, std::map<int, ComplexMatrix> coeffs);

  std::map<int, ComplexMatrix> coeffs_;
};

/// Diagonal operator with block k equal to j(w_off + k w1) I.
class ShiftOperator {
 public:
  int order() const { return order_; }
  int dim() const { return dim_; }
  double omega1() const { return omega1_; }
  double omega_offset() const { return omega_off_; }

  /// Angular frequency carried by harmonic k: w_off + k w1.
  double omega(int k) const { return omega_off_ + k * omega1_; }
  Complex entry(int k) const { return Complex{0.0, omega(k)}; }
  ComplexVector diagonal() const;
  ComplexMatrix dense() const;

 private:
  friend ShiftOperator build_shift(int, int, double, double);
  ShiftOperator(int order, int dim, double omega1, double omega_off)
      : order_(order), dim_(dim), omega1_(omega1), omega_off_(omega_off) {}

  int order_;
  int dim_;
  double omega1_;
  double omega_off_;
};

/// Rectangular-rule Fourier coefficient of samples spanning exactly one period
/// (sample n taken at t0 + n T / N). Spectrally exact for band-limited signals.
Complex fourier_of_samples(std::span<const Complex> samples, double period, int k);
Complex fourier_of_samples(std::span<const double> samples, double period, int k);

/// Convenience: sample f over one period and return coefficients -h..h.
HarmonicCoeffs coefficients_of(const std::function<Complex(double)>& signal, double omega,
                               int order, int samples_per_period = 2048);

/// Blocks keyed by harmonic index; absent keys are zero. Keys with |k| > 2h
/// cannot reach any block of the truncated operator and are ignored.
ToeplitzOperator build_toeplitz(const std::map<int, ComplexMatrix>& block_coeffs, int order,
                                int block_size);

ShiftOperator build_shift(int order, int dim, double omega1, double omega_offset);

/// Solves (A - N) X + U = 0.
HarmonicVector solve_steady_state(const HarmonicOperator& system, const ShiftOperator& shift,
                                  const HarmonicVector& forcing);

/// Solves (A_p - N_p) X_p + B_p U_p = 0; B_p defaults to identity.
HarmonicVector solve_perturbation(const HarmonicOperator& system,
                                  const std::optional<HarmonicOperator>& input,
                                  const ShiftOperator& shift, const HarmonicVector& forcing);

/// Truncated series sum_k X_k e^{jk w t}.
Complex reconstruct_time(const HarmonicCoeffs& coeffs, double t);

/// Condition threshold above which solves raise SingularSystemError.
inline constexpr double kMaxCondition = 1e12;

/// Relative residual ||M x - b|| / ||b|| guaranteed by every solve.
inline constexpr double kResidualTolerance = 1e-9;

}  // namespace mmchss::hss
