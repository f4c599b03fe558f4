#include "mmchss/hss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mmchss::hss {

namespace {

void check_order(int order) {
  if (order < 0 || order > kMaxOrder) {
    throw InvalidArgument("harmonic order must be in [0, " + std::to_string(kMaxOrder) +
                          "], got " + std::to_string(order));
  }
}

void check_dim(int dim) {
  if (dim <= 0) throw InvalidArgument("block size must be positive");
}

// LU solve of M x = b with a 1-norm condition check and one step of
// iterative refinement when the residual is not already at the target.
ComplexVector solve_lifted(const ComplexMatrix& m, const ComplexVector& b) {
  if (b.norm() == 0.0) return ComplexVector::Zero(b.size());

  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  // partial pivoting never fails, so a zero pivot has to be caught here
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = pivots.minCoeff() > 0.0 ? lu.rcond() : 0.0;
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!std::isfinite(cond) || cond > kMaxCondition) {
    std::ostringstream msg;
    msg << "harmonic system is singular or ill-conditioned (1-norm condition estimate "
        << cond << ")";
    throw SingularSystemError(msg.str(), cond);
  }

  ComplexVector x = lu.solve(b);
  ComplexVector r = b - m * x;
  if (r.norm() > kResidualTolerance * b.norm()) {
    x += lu.solve(r);
    r = b - m * x;
  }
  if (!x.allFinite() || r.norm() > kResidualTolerance * b.norm()) {
    std::ostringstream msg;
    msg << "harmonic solve residual " << r.norm() / b.norm() << " exceeds tolerance";
    throw SingularSystemError(msg.str(), cond);
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------- coeffs

HarmonicCoeffs::HarmonicCoeffs(int order, double omega, std::vector<Complex> coeffs)
    : order_(order), omega_(omega), coeffs_(std::move(coeffs)) {
  check_order(order);
  if (coeffs_.size() != static_cast<std::size_t>(2 * order + 1)) {
    throw InvalidArgument("expected 2h+1 coefficients");
  }
}

HarmonicCoeffs HarmonicCoeffs::zeros(int order, double omega) {
  check_order(order);
  return HarmonicCoeffs(order, omega, std::vector<Complex>(2 * order + 1));
}

Complex HarmonicCoeffs::operator[](int k) const {
  if (k < -order_ || k > order_) return {};
  return coeffs_[static_cast<std::size_t>(k + order_)];
}

void HarmonicCoeffs::set(int k, Complex value) {
  if (k < -order_ || k > order_) throw InvalidArgument("harmonic index out of range");
  coeffs_[static_cast<std::size_t>(k + order_)] = value;
}

bool HarmonicCoeffs::is_conjugate_symmetric(double rel_tol) const {
  double scale = 0.0;
  for (const auto& c : coeffs_) scale = std::max(scale, std::abs(c));
  for (int k = 1; k <= order_; ++k) {
    if (std::abs((*this)[-k] - std::conj((*this)[k])) > rel_tol * scale) return false;
  }
  return std::abs((*this)[0].imag()) <= rel_tol * scale;
}

// ---------------------------------------------------------------- vector

HarmonicVector::HarmonicVector(int order, int dim)
    : order_(order), dim_(dim) {
  check_order(order);
  check_dim(dim);
  data_ = ComplexVector::Zero(static_cast<Eigen::Index>(2 * order + 1) * dim);
}

HarmonicVector::HarmonicVector(int order, int dim, ComplexVector data)
    : order_(order), dim_(dim), data_(std::move(data)) {
  check_order(order);
  check_dim(dim);
  if (data_.size() != static_cast<Eigen::Index>(2 * order + 1) * dim) {
    throw InvalidArgument("harmonic vector length must be dim*(2h+1)");
  }
}

Complex HarmonicVector::operator()(int k, int i) const {
  if (k < -order_ || k > order_ || i < 0 || i >= dim_) return {};
  return data_[offset(k) + i];
}

void HarmonicVector::set(int k, int i, Complex value) {
  if (k < -order_ || k > order_ || i < 0 || i >= dim_) {
    throw InvalidArgument("harmonic vector index out of range");
  }
  data_[offset(k) + i] = value;
}

HarmonicCoeffs HarmonicVector::component(int i, double omega) const {
  if (i < 0 || i >= dim_) throw InvalidArgument("component index out of range");
  std::vector<Complex> c(static_cast<std::size_t>(harmonics()));
  for (int k = -order_; k <= order_; ++k) c[static_cast<std::size_t>(k + order_)] = (*this)(k, i);
  return HarmonicCoeffs(order_, omega, std::move(c));
}

HarmonicVector HarmonicVector::truncated(int order) const {
  HarmonicVector out(order, dim_);
  const int common = std::min(order, order_);
  for (int k = -common; k <= common; ++k) {
    for (int i = 0; i < dim_; ++i) out.set(k, i, (*this)(k, i));
  }
  return out;
}

bool HarmonicVector::is_conjugate_symmetric(double rel_tol) const {
  const double scale = data_.cwiseAbs().maxCoeff();
  for (int k = 0; k <= order_; ++k) {
    for (int i = 0; i < dim_; ++i) {
      if (std::abs((*this)(-k, i) - std::conj((*this)(k, i))) > rel_tol * scale) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- operators

HarmonicOperator::HarmonicOperator(int order, int block_size)
    : order_(order), block_size_(block_size) {
  check_order(order);
  check_dim(block_size);
  const auto n = static_cast<Eigen::Index>(2 * order + 1) * block_size;
  dense_ = ComplexMatrix::Zero(n, n);
}

HarmonicOperator::HarmonicOperator(int order, int block_size, ComplexMatrix dense)
    : order_(order), block_size_(block_size), dense_(std::move(dense)) {
  check_order(order);
  check_dim(block_size);
  const auto n = static_cast<Eigen::Index>(2 * order + 1) * block_size;
  if (dense_.rows() != n || dense_.cols() != n) {
    throw InvalidArgument("operator matrix must be square of size dim*(2h+1)");
  }
}

ComplexMatrix HarmonicOperator::block(int row_k, int col_k) const {
  if (std::abs(row_k) > order_ || std::abs(col_k) > order_) {
    return ComplexMatrix::Zero(block_size_, block_size_);
  }
  return dense_.block(index(row_k, 0), index(col_k, 0), block_size_, block_size_);
}

Complex HarmonicOperator::entry(int row_k, int row_i, int col_k, int col_i) const {
  return dense_(index(row_k, row_i), index(col_k, col_i));
}

void HarmonicOperator::add_to_entry(int row_k, int row_i, int col_k, int col_i, Complex value) {
  dense_(index(row_k, row_i), index(col_k, col_i)) += value;
}

HarmonicVector HarmonicOperator::apply(const HarmonicVector& x) const {
  if (x.order() != order_ || x.dim() != block_size_) {
    throw InvalidArgument("operator/vector shape mismatch");
  }
  return HarmonicVector(order_, block_size_, dense_ * x.data());
}

HarmonicOperator& HarmonicOperator::operator+=(const HarmonicOperator& other) {
  if (other.order_ != order_ || other.block_size_ != block_size_) {
    throw InvalidArgument("operator shape mismatch");
  }
  dense_ += other.dense_;
  return *this;
}

ToeplitzOperator::ToeplitzOperator(int order, int block_size,
                                   std::map<int, ComplexMatrix> coeffs)
    : HarmonicOperator(order, block_size), coeffs_(std::move(coeffs)) {
  for (int r = -order; r <= order; ++r) {
    for (int c = -order; c <= order; ++c) {
      auto it = coeffs_.find(r - c);
      if (it == coeffs_.end()) continue;
      dense_.block(index(r, 0), index(c, 0), block_size, block_size) = it->second;
    }
  }
}

ComplexMatrix ToeplitzOperator::coefficient(int k) const {
  auto it = coeffs_.find(k);
  if (it == coeffs_.end() || std::abs(k) > order_) {
    return ComplexMatrix::Zero(block_size_, block_size_);
  }
  return it->second;
}

ToeplitzOperator build_toeplitz(const std::map<int, ComplexMatrix>& block_coeffs, int order,
                                int block_size) {
  check_order(order);
  check_dim(block_size);
  std::map<int, ComplexMatrix> kept;
  for (const auto& [k, blk] : block_coeffs) {
    if (blk.rows() != block_size || blk.cols() != block_size) {
      std::ostringstream msg;
      msg << "Toeplitz block " << k << " is " << blk.rows() << "x" << blk.cols()
          << ", expected " << block_size << "x" << block_size;
      throw InvalidArgument(msg.str());
    }
    if (std::abs(k) <= 2 * order) kept.emplace(k, blk);
  }
  return ToeplitzOperator(order, block_size, std::move(kept));
}

ComplexVector ShiftOperator::diagonal() const {
  ComplexVector d(static_cast<Eigen::Index>(2 * order_ + 1) * dim_);
  for (int k = -order_; k <= order_; ++k) {
    d.segment(static_cast<Eigen::Index>(k + order_) * dim_, dim_).setConstant(entry(k));
  }
  return d;
}

ComplexMatrix ShiftOperator::dense() const { return diagonal().asDiagonal(); }

ShiftOperator build_shift(int order, int dim, double omega1, double omega_offset) {
  check_order(order);
  check_dim(dim);
  if (!(omega1 > 0.0) || !std::isfinite(omega1)) {
    throw InvalidArgument("fundamental angular frequency must be positive");
  }
  return ShiftOperator(order, dim, omega1, omega_offset);
}

// ---------------------------------------------------------------- fourier

Complex fourier_of_samples(std::span<const Complex> samples, double period, int k) {
  if (samples.empty()) throw InvalidArgument("no samples");
  if (!(period > 0.0)) throw InvalidArgument("period must be positive");
  const auto n = samples.size();
  if (n < 4 * static_cast<std::size_t>(std::abs(k)) + 4) {
    throw InvalidArgument("too few samples for harmonic " + std::to_string(k));
  }
  Complex acc{};
  for (std::size_t i = 0; i < n; ++i) {
    // reduce the phase index mod n to keep the argument small
    const auto idx = static_cast<long long>((static_cast<long long>(k) * static_cast<long long>(i)) %
                                            static_cast<long long>(n));
    const double phase = -kTwoPi * static_cast<double>(idx) / static_cast<double>(n);
    acc += samples[i] * Complex{std::cos(phase), std::sin(phase)};
  }
  return acc / static_cast<double>(n);
}

Complex fourier_of_samples(std::span<const double> samples, double period, int k) {
  std::vector<Complex> c(samples.begin(), samples.end());
  return fourier_of_samples(std::span<const Complex>(c), period, k);
}

HarmonicCoeffs coefficients_of(const std::function<Complex(double)>& signal, double omega,
                               int order, int samples_per_period) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (samples_per_period < 4 * order + 4) throw InvalidArgument("too few samples per period");
  const double period = kTwoPi / omega;
  std::vector<Complex> s(static_cast<std::size_t>(samples_per_period));
  for (int n = 0; n < samples_per_period; ++n) s[n] = signal(period * n / samples_per_period);
  auto out = HarmonicCoeffs::zeros(order, omega);
  for (int k = -order; k <= order; ++k) out.set(k, fourier_of_samples(s, period, k));
  return out;
}

Complex reconstruct_time(const HarmonicCoeffs& coeffs, double t) {
  Complex acc{};
  for (int k = -coeffs.order(); k <= coeffs.order(); ++k) {
    acc += coeffs[k] * std::exp(kJ * (k * coeffs.omega() * t));
  }
  return acc;
}

// ---------------------------------------------------------------- solves

namespace {

void check_shapes(const HarmonicOperator& a, const ShiftOperator& n, const HarmonicVector& u) {
  if (a.order() != n.order() || a.order() != u.order() || a.block_size() != n.dim() ||
      a.block_size() != u.dim()) {
    throw InvalidArgument("operator, shift and forcing must share order and block size");
  }
}

}  // namespace

HarmonicVector solve_steady_state(const HarmonicOperator& system, const ShiftOperator& shift,
                                  const HarmonicVector& forcing) {
  check_shapes(system, shift, forcing);
  ComplexMatrix m = system.dense();
  m.diagonal() -= shift.diagonal();
  ComplexVector x = solve_lifted(m, -forcing.data());
  return HarmonicVector(forcing.order(), forcing.dim(), std::move(x));
}

HarmonicVector solve_perturbation(const HarmonicOperator& system,
                                  const std::optional<HarmonicOperator>& input,
                                  const ShiftOperator& shift, const HarmonicVector& forcing) {
  check_shapes(system, shift, forcing);
  ComplexVector rhs = forcing.data();
  if (input) {
    if (input->order() != system.order() || input->block_size() != system.block_size()) {
      throw InvalidArgument("input operator shape mismatch");
    }
    rhs = input->dense() * rhs;
  }
  ComplexMatrix m = system.dense();
  m.diagonal() -= shift.diagonal();
  ComplexVector x = solve_lifted(m, -rhs);
  return HarmonicVector(forcing.order(), forcing.dim(), std::move(x));
}

}  // namespace mmchss::hss
