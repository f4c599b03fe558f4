#include <cmath>
#include <random>

#include "doctest.h"
#include "mmchss/hss.hpp"

using namespace mmchss;
using namespace mmchss::hss;

namespace {

constexpr double kW1 = kTwoPi * 50.0;
constexpr double kT1 = 1.0 / 50.0;

std::vector<double> sample(const std::function<double(double)>& fn, int n) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = fn(kT1 * i / n);
  return s;
}

// Random real band-limited signal with harmonics up to `band`.
HarmonicCoeffs random_signal(std::mt19937& rng, int band) {
  std::normal_distribution<double> g;
  auto c = HarmonicCoeffs::zeros(band, kW1);
  c.set(0, g(rng));
  for (int k = 1; k <= band; ++k) {
    const Complex v{g(rng), g(rng)};
    c.set(k, v);
    c.set(-k, std::conj(v));
  }
  return c;
}

ComplexMatrix random_matrix(std::mt19937& rng, int n) {
  std::normal_distribution<double> g;
  ComplexMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  }
  return m;
}

}  // namespace

TEST_CASE("fourier_of_samples on elementary signals") {
  const auto c = sample([](double) { return 3.5; }, 64);
  CHECK(std::abs(fourier_of_samples(c, kT1, 0) - 3.5) < 1e-14);
  CHECK(std::abs(fourier_of_samples(c, kT1, 1)) < 1e-14);

  const auto cosine = sample([](double t) { return std::cos(kW1 * t); }, 64);
  CHECK(std::abs(fourier_of_samples(cosine, kT1, 1) - 0.5) < 1e-14);
  CHECK(std::abs(fourier_of_samples(cosine, kT1, -1) - 0.5) < 1e-14);
  CHECK(std::abs(fourier_of_samples(cosine, kT1, 0)) < 1e-14);

  const double m = 0.85, th = 0.3;
  const auto shifted = sample([&](double t) { return m * std::cos(kW1 * t + th); }, 64);
  CHECK(std::abs(fourier_of_samples(shifted, kT1, 1) - 0.5 * m * std::polar(1.0, th)) < 1e-14);
}

TEST_CASE("fourier_of_samples rejects bad input") {
  const std::vector<double> none;
  CHECK_THROWS_AS(fourier_of_samples(none, kT1, 0), InvalidArgument);
  const auto s = sample([](double) { return 1.0; }, 16);
  CHECK_THROWS_AS(fourier_of_samples(s, 0.0, 0), InvalidArgument);
  CHECK_THROWS_AS(fourier_of_samples(s, -1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(fourier_of_samples(s, kT1, 4), InvalidArgument);
  CHECK_NOTHROW(fourier_of_samples(s, kT1, 3));
}

TEST_CASE("coefficients and reconstruction round trip") {
  std::mt19937 rng(7);
  const auto sig = random_signal(rng, 5);
  const auto back = coefficients_of([&](double t) { return reconstruct_time(sig, t); }, kW1, 7, 64);
  for (int k = -7; k <= 7; ++k) CHECK(std::abs(back[k] - sig[k]) < 1e-12);
  CHECK(back.is_conjugate_symmetric());
  const double t = 0.0123;
  CHECK(std::abs(reconstruct_time(sig, t).imag()) < 1e-12);
}

TEST_CASE("reconstruct_time elementary cases") {
  auto one = HarmonicCoeffs::zeros(2, kW1);
  one.set(0, 1.0);
  CHECK(std::abs(reconstruct_time(one, 0.00731) - 1.0) < 1e-15);
  auto cosine = HarmonicCoeffs::zeros(1, kW1);
  cosine.set(1, 0.5);
  cosine.set(-1, 0.5);
  for (double t : {0.0, 0.001, 0.0137}) {
    CHECK(std::abs(reconstruct_time(cosine, t) - std::cos(kW1 * t)) < 1e-14);
  }
}

TEST_CASE("harmonic containers") {
  HarmonicVector x(2, 3);
  CHECK(x.size() == 15);
  x.set(-2, 0, {1.0, 2.0});
  CHECK(x.data()(0) == Complex(1.0, 2.0));
  x.set(1, 2, 5.0);
  CHECK(x.data()(3 * 3 + 2) == Complex(5.0));
  CHECK(x(3, 0) == Complex{});
  CHECK_THROWS_AS(x.set(3, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(x.component(3, kW1), InvalidArgument);
  const auto wider = x.truncated(4);
  CHECK(wider(1, 2) == Complex(5.0));
  CHECK(wider(-2, 0) == Complex(1.0, 2.0));
  CHECK(wider.truncated(1)(-2, 0) == Complex{});
  CHECK_THROWS_AS(HarmonicVector(2, 3, ComplexVector::Zero(14)), InvalidArgument);
  CHECK_THROWS_AS(HarmonicCoeffs(1, kW1, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("build_toeplitz structure") {
  std::mt19937 rng(11);
  const int h = 3, d = 2;
  std::map<int, ComplexMatrix> coeffs;
  for (int k = -h; k <= h; ++k) coeffs[k] = random_matrix(rng, d);
  const auto t = build_toeplitz(coeffs, h, d);
  REQUIRE(t.dense().rows() == d * (2 * h + 1));
  for (int r = -h; r <= h; ++r) {
    for (int c = -h; c <= h; ++c) {
      const ComplexMatrix expected = coeffs[r - c];
      if (std::abs(r - c) <= h) {
        CHECK((t.block(r, c) - expected).norm() < 1e-15);
      } else {
        CHECK(t.block(r, c).norm() == 0.0);
      }
    }
  }

  SUBCASE("time invariant case is block diagonal") {
    const ComplexMatrix a0 = random_matrix(rng, 3);
    const auto ti = build_toeplitz({{0, a0}}, 2, 3);
    for (int r = -2; r <= 2; ++r) {
      for (int c = -2; c <= 2; ++c) {
        CHECK((ti.block(r, c) - (r == c ? a0 : ComplexMatrix::Zero(3, 3))).norm() == 0.0);
      }
    }
  }

  SUBCASE("inconsistent block size") {
    CHECK_THROWS_AS(build_toeplitz({{0, ComplexMatrix::Zero(2, 2)}, {1, ComplexMatrix::Zero(3, 3)}},
                                   2, 2),
                    InvalidArgument);
  }
}

TEST_CASE("toeplitz product of two cosines") {
  // cos * cos = 1/2 + cos(2 w1 t)/2; at h = 1 the k = 0 entry is 1/2
  ComplexMatrix half(1, 1);
  half(0, 0) = 0.5;
  const auto a = build_toeplitz({{-1, half}, {1, half}}, 1, 1);
  HarmonicVector b(1, 1);
  b.set(-1, 0, 0.5);
  b.set(1, 0, 0.5);
  const auto prod = a.apply(b);
  CHECK(std::abs(prod(0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(prod(1, 0)) < 1e-15);

  const auto ab = sample([](double t) { return std::cos(kW1 * t) * std::cos(kW1 * t); }, 64);
  CHECK(std::abs(fourier_of_samples(ab, kT1, 0) - prod(0, 0)) < 1e-14);
}

TEST_CASE("convolution theorem on random band-limited signals") {
  std::mt19937 rng(2024);
  for (int h : {2, 4, 8}) {
    CAPTURE(h);
    const int band_a = 1 + h / 4;
    const auto a = random_signal(rng, band_a);
    const auto b = random_signal(rng, h);
    std::map<int, ComplexMatrix> blocks;
    for (int k = -band_a; k <= band_a; ++k) blocks[k] = ComplexMatrix::Constant(1, 1, a[k]);
    HarmonicVector bv(h, 1);
    for (int k = -h; k <= h; ++k) bv.set(k, 0, b[k]);
    const auto prod = build_toeplitz(blocks, h, 1).apply(bv);

    const auto exact = coefficients_of(
        [&](double t) { return reconstruct_time(a, t) * reconstruct_time(b, t); }, kW1, h, 256);
    for (int k = -(h - band_a); k <= h - band_a; ++k) {
      CHECK(std::abs(prod(k, 0) - exact[k]) < 1e-12 * (1.0 + std::abs(exact[k])));
    }
  }
}

TEST_CASE("build_shift entries") {
  const auto n = build_shift(1, 1, 314.0, 0.0);
  const ComplexVector d = n.diagonal();
  CHECK(d(0) == Complex(0.0, -314.0));
  CHECK(d(1) == Complex(0.0, 0.0));
  CHECK(d(2) == Complex(0.0, 314.0));
  CHECK(n.dense().isDiagonal());

  const auto zero = build_shift(0, 3, kW1, 2.5);
  CHECK(zero.dense().rows() == 3);
  CHECK((zero.diagonal() - ComplexVector::Constant(3, Complex(0.0, 2.5))).norm() == 0.0);

  const auto p = build_shift(2, 1, kTwoPi * 50.0, kTwoPi * 35.0);
  const double expect[] = {35.0 - 100.0, 35.0 - 50.0, 35.0, 85.0, 135.0};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(p.diagonal()(i) - Complex(0.0, kTwoPi * expect[i])) < 1e-12);

  CHECK_THROWS_AS(build_shift(1, 1, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(build_shift(-1, 1, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("steady state of a first-order filter") {
  // x' = -x + cos(w1 t): X_{+-1} = 1 / (2 (1 +- j w1))
  const int h = 3;
  const double w1 = 2.0;
  const auto a = build_toeplitz({{0, ComplexMatrix::Constant(1, 1, -1.0)}}, h, 1);
  HarmonicVector u(h, 1);
  u.set(1, 0, 0.5);
  u.set(-1, 0, 0.5);
  const auto x = solve_steady_state(a, build_shift(h, 1, w1, 0.0), u);
  CHECK(std::abs(x(1, 0) - 1.0 / (2.0 * Complex(1.0, w1))) < 1e-14);
  CHECK(std::abs(x(-1, 0) - 1.0 / (2.0 * Complex(1.0, -w1))) < 1e-14);
  CHECK(std::abs(x(0, 0)) < 1e-15);
  CHECK(x.is_conjugate_symmetric());
}

TEST_CASE("solves: zero input, residual and conjugate symmetry") {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  const int h = 4, d = 3;
  std::map<int, ComplexMatrix> blocks;
  blocks[0] = random_matrix(rng, d).real().cast<Complex>() - 10.0 * ComplexMatrix::Identity(d, d);
  for (int k = 1; k <= 2; ++k) {
    blocks[k] = random_matrix(rng, d);
    blocks[-k] = blocks[k].conjugate();
  }
  const auto a = build_toeplitz(blocks, h, d);
  const auto n = build_shift(h, d, kW1, 0.0);

  HarmonicVector u(h, d);
  for (int i = 0; i < d; ++i) {
    u.set(0, i, g(rng));
    for (int k = 1; k <= h; ++k) {
      const Complex v{g(rng), g(rng)};
      u.set(k, i, v);
      u.set(-k, i, std::conj(v));
    }
  }
  const auto x = solve_steady_state(a, n, u);
  CHECK(x.is_conjugate_symmetric(1e-12));
  ComplexMatrix m = a.dense();
  m.diagonal() -= n.diagonal();
  CHECK((m * x.data() + u.data()).norm() <= kResidualTolerance * u.data().norm());

  const auto xp = solve_perturbation(a, std::nullopt, build_shift(h, d, kW1, 123.0), HarmonicVector(h, d));
  CHECK(xp.data().norm() == 0.0);

  // identity input operator is the same as none
  const HarmonicOperator eye(h, d, ComplexMatrix::Identity(d * (2 * h + 1), d * (2 * h + 1)));
  const auto np = build_shift(h, d, kW1, 77.0);
  const auto x1 = solve_perturbation(a, std::nullopt, np, u);
  const auto x2 = solve_perturbation(a, eye, np, u);
  CHECK((x1.data() - x2.data()).norm() < 1e-12 * x1.data().norm());
}

TEST_CASE("singular systems are reported with a condition estimate") {
  const auto a = build_toeplitz({{0, ComplexMatrix::Zero(2, 2)}}, 1, 2);
  HarmonicVector u(1, 2);
  u.set(0, 0, 1.0);
  try {
    solve_steady_state(a, build_shift(1, 2, kW1, 0.0), u);
    FAIL("expected SingularSystemError");
  } catch (const SingularSystemError& e) {
    CHECK(e.condition_estimate() > kMaxCondition);
  }
  CHECK_THROWS_AS(solve_steady_state(a, build_shift(2, 2, kW1, 0.0), u), InvalidArgument);
}
