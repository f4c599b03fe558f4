#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "mmchss/td_sim.hpp"

using namespace mmchss;
using namespace mmchss::sim;

namespace {

mmc::CircuitParams unmodulated() {
  mmc::CircuitParams p;
  p.modulation_index = 0.0;
  return p;
}

Complex series_rlc(const mmc::CircuitParams& p, double f) {
  const double w = kTwoPi * f;
  return 0.5 * (p.arm_resistance + Complex(0.0, w * p.arm_inductance) +
                1.0 / Complex(0.0, 4.0 * p.arm_capacitance() * w));
}

bool near(Complex a, Complex b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("phasor extraction") {
  const double dt = 1e-4;
  std::vector<double> t(2000), x(2000), c(2000), two(2000);
  for (std::size_t n = 0; n < t.size(); ++n) {
    t[n] = n * dt;
    x[n] = 3.0 * std::cos(kTwoPi * 35.0 * t[n] + 0.4);
    c[n] = 12.0;
    two[n] = x[n] + 5.0 * std::sin(kTwoPi * 40.0 * t[n]);
  }
  CHECK(near(extract_phasor(t, x, dt, 35.0), std::polar(3.0, 0.4), 1e-12));
  CHECK(std::abs(extract_phasor(t, c, dt, 35.0)) < 1e-12);
  CHECK(near(extract_phasor(t, two, dt, 35.0), std::polar(3.0, 0.4), 1e-12));

  CHECK_THROWS_AS(extract_phasor(t, x, dt, 35.3), InvalidArgument);
  CHECK_THROWS_AS(extract_phasor(t, x, dt, 0.0), InvalidArgument);
  CHECK_THROWS_AS(extract_phasor(std::span(t).first(10), x, dt, 35.0), InvalidArgument);
}

TEST_CASE("common period") {
  CHECK(common_period(50.0, 35.0) == doctest::Approx(0.2));
  CHECK(common_period(50.0, 10.0) == doctest::Approx(0.1));
  CHECK(common_period(50.0, 100.0) == doctest::Approx(0.02));
  CHECK(common_period(50.0, 35.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(common_period(50.0, 50.0 * std::sqrt(2.0)), InvalidArgument);
  CHECK_THROWS_AS(common_period(50.0, 0.0), InvalidArgument);
}

TEST_CASE("configuration checks") {
  const mmc::CircuitParams p;
  const mmc::ControlConfig open;
  mmc::ControlConfig acv;
  acv.mode = mmc::ControlMode::AcVoltageLoop;
  SimConfig s;
  CHECK(s.resolved_dt(p) == doctest::Approx(1e-5));
  CHECK(s.resolved_amplitude(p) == doctest::Approx(3200.0));
  CHECK_NOTHROW(s.validate(p, acv));

  s.dt = 2e-4;
  CHECK_THROWS_AS(s.validate(p, open), InvalidArgument);
  s.dt = 3e-5;
  CHECK_THROWS_AS(s.validate(p, open), InvalidArgument);
  s.dt = 4e-5;
  CHECK_NOTHROW(s.validate(p, open));
  CHECK_THROWS_AS(s.validate(p, acv), InvalidArgument);  // T_s = 2.5 dt
  s = {};
  s.measure_cycles = 0;
  CHECK_THROWS_AS(s.validate(p, open), InvalidArgument);
  s = {};
  s.amplitude = -1.0;
  CHECK_THROWS_AS(simulate(p, open, s, std::nullopt), InvalidArgument);
}

TEST_CASE("unmodulated leg stays at its fixed point") {
  SimConfig s;
  s.settle_cycles = 5;
  const auto ts = simulate(unmodulated(), {}, s, std::nullopt);
  REQUIRE(ts.size() == 2000u * 10u);  // window of common_period(50, 35) = 0.2 s
  for (std::size_t n = 0; n < ts.size(); n += 97) {
    CHECK(std::abs(ts.i_c[n]) < 1e-9);
    CHECK(std::abs(ts.i_g[n]) < 1e-9);
    CHECK(ts.v_cu[n] == doctest::Approx(320e3));
    CHECK(ts.v_cl[n] == doctest::Approx(320e3));
  }
}

TEST_CASE("simulation case periodic steady state") {
  const mmc::CircuitParams p;
  const SimConfig s;
  const auto ts = simulate(p, {}, s, std::nullopt);
  CHECK(ts.periodic_change < 1e-6);
  for (double v : ts.i_c) REQUIRE(std::isfinite(v));

  const auto op = mmc::steady_state(p, 4);
  SUBCASE("harmonic balance agrees with the waveform") {
    // the window starts on a fundamental period boundary
    const Complex ic2 = 0.5 * extract_phasor(ts, Signal::CirculatingCurrent, 100.0);
    CHECK(near(ic2, op.circulating_current(2), 0.02));
    const Complex ig1 = 0.5 * extract_phasor(ts, Signal::AcCurrent, 50.0);
    CHECK(near(ig1, op.ac_current(1), 0.01));

    double err = 0.0, ref = 0.0;
    for (std::size_t n = 0; n < 2000; ++n) {
      const double model = op.waveform(mmc::kUpperCapVoltage, ts.t[n]);
      err += (model - ts.v_cu[n]) * (model - ts.v_cu[n]);
      ref += ts.v_cu[n] * ts.v_cu[n];
    }
    CHECK(std::sqrt(err / ref) < 0.01);
  }

  SUBCASE("dc power balances load and arm losses") {
    std::vector<double> pin(ts.size()), loss(ts.size());
    for (std::size_t n = 0; n < ts.size(); ++n) {
      pin[n] = ts.v_dc[n] * ts.i_c[n];
      loss[n] = p.load_resistance * ts.i_g[n] * ts.i_g[n] +
                p.arm_resistance * (2.0 * ts.i_c[n] * ts.i_c[n] + 0.5 * ts.i_g[n] * ts.i_g[n]);
    }
    CHECK(mean(pin) == doctest::Approx(mean(loss)).epsilon(0.005));
  }

  SUBCASE("capacitor charge matches the integrated arm current") {
    const double c = p.arm_capacitance();
    double q = 0.0;
    const std::size_t n_end = 1000;
    for (std::size_t n = 0; n < n_end; ++n) {
      const double a = ts.n_u[n] * (ts.i_c[n] + 0.5 * ts.i_g[n]);
      const double b = ts.n_u[n + 1] * (ts.i_c[n + 1] + 0.5 * ts.i_g[n + 1]);
      q += 0.5 * (a + b) * ts.dt;
    }
    const double dv = ts.v_cu[n_end] - ts.v_cu[0];
    CHECK(c * dv == doctest::Approx(q).epsilon(1e-4));
  }
}

TEST_CASE("zero-amplitude perturbation leaves the baseline untouched") {
  const mmc::CircuitParams p;
  SimConfig s;
  s.settle_cycles = 20;
  const auto base = simulate(p, {}, s, std::nullopt);
  const auto pert = simulate(p, {}, s, Perturbation{35.0, 0.0});
  const Complex ref = extract_phasor(base, Signal::AcCurrent, 50.0);
  CHECK(std::abs(extract_phasor(pert, Signal::AcCurrent, 35.0) -
                 extract_phasor(base, Signal::AcCurrent, 35.0)) < 1e-10 * std::abs(ref));
}

TEST_CASE("measured impedance, unmodulated leg") {
  const auto p = unmodulated();
  for (double f : {10.0, 35.0, 80.0, 123.0}) {
    CAPTURE(f);
    SimConfig s;
    s.freq_hz = f;
    s.settle_cycles = 100;
    CHECK(near(measure_impedance(p, {}, s).z, series_rlc(p, f), 0.01));
  }
}

TEST_CASE("measured impedance agrees with the harmonic model") {
  const mmc::CircuitParams p;
  SimConfig s;
  s.freq_hz = 35.0;
  const auto m = measure_impedance(p, {}, s);
  const Complex analytic{3.0761074598786333, -72.61247689986506};
  CHECK(std::abs(std::abs(m.z) / std::abs(analytic) - 1.0) < 0.05);
  CHECK(std::abs(std::arg(m.z / analytic)) * 180.0 / kPi < 5.0);

  SUBCASE("linear regime") {
    SimConfig half = s;
    half.amplitude = 0.5 * s.resolved_amplitude(p);
    CHECK(near(measure_impedance(p, {}, half).z, m.z, 0.005));
  }
}

TEST_CASE("harmonic bins use the quadrature pair") {
  // the unmodulated leg is time invariant so no sideband folds back
  const auto p = unmodulated();
  SimConfig s;
  s.freq_hz = 150.0;
  s.settle_cycles = 100;
  CHECK(near(measure_impedance(p, {}, s).z, series_rlc(p, 150.0), 0.01));
}

TEST_CASE("RK4 step-size convergence") {
  const mmc::CircuitParams p;
  std::vector<Complex> x;
  for (int div : {200, 400, 800}) {
    SimConfig s;
    s.dt = 1.0 / (50.0 * div);  // default settling; a residual transient masks the rate
    const auto ts = simulate(p, {}, s, std::nullopt);
    x.push_back(extract_phasor(ts, Signal::CirculatingCurrent, 100.0));
  }
  const double ratio = std::abs(x[0] - x[1]) / std::abs(x[1] - x[2]);
  CHECK(ratio == doctest::Approx(16.0).epsilon(3.0 / 16.0));
}

TEST_CASE("closed loops keep the open-loop operating point") {
  const mmc::CircuitParams p;
  mmc::ControlConfig c;
  c.mode = mmc::ControlMode::AcVoltagePlusCirc;
  SimConfig s;
  s.settle_cycles = 30;
  const auto open = simulate(p, {}, s, std::nullopt);
  const auto closed = simulate(p, c, s, std::nullopt);
  CHECK(near(extract_phasor(closed, Signal::CirculatingCurrent, 100.0),
             extract_phasor(open, Signal::CirculatingCurrent, 100.0), 1e-3));
  CHECK(near(extract_phasor(closed, Signal::AcVoltage, 50.0),
             extract_phasor(open, Signal::AcVoltage, 50.0), 1e-4));
}

TEST_CASE("divergence is reported with its time") {
  const mmc::CircuitParams p;
  mmc::ControlConfig c;
  c.mode = mmc::ControlMode::CircCurrentLoop;
  c.circ_gain = -1e6;
  SimConfig s;
  s.settle_cycles = 20;
  try {
    simulate(p, c, s, std::nullopt);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 0.4);
  }
}

TEST_CASE("trajectory CSV") {
  SimConfig s;
  s.settle_cycles = 1;
  const auto ts = simulate(mmc::CircuitParams{}, {}, s, std::nullopt);
  std::ostringstream out;
  write_trajectory_csv(ts, out);
  const std::string text = out.str();
  CHECK(text.rfind("t_s,i_c_a,v_cu_v,v_cl_v,i_g_a,v_g_v\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(ts.size() + 1));
}
