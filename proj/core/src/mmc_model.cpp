#include "mmchss/mmc_model.hpp"

#include <cmath>
#include <sstream>

namespace mmchss::mmc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void CircuitParams::validate() const {
  require(finite_all({dc_voltage, arm_inductance, arm_resistance, sm_capacitance, fundamental_hz,
                      modulation_index, modulation_phase, m2_index, m2_phase, load_resistance,
                      load_inductance}),
          "circuit parameters must be finite");
  require(dc_voltage > 0.0, "dc voltage must be positive");
  require(arm_inductance > 0.0, "arm inductance must be positive");
  require(sm_capacitance > 0.0, "submodule capacitance must be positive");
  require(sm_per_arm > 0, "submodules per arm must be positive");
  require(fundamental_hz > 0.0, "fundamental frequency must be positive");
  require(arm_resistance >= 0.0, "arm resistance must be non-negative");
  require(load_resistance >= 0.0, "load resistance must be non-negative");
  require(load_inductance >= 0.0, "load inductance must be non-negative");
  require(modulation_index >= 0.0 && modulation_index < 1.0, "modulation index must be in [0, 1)");
  require(m2_index >= 0.0 && m2_index < 1.0, "second-harmonic modulation index must be in [0, 1)");
}

CircuitParams simulation_case_params() {
  // m = 2 V_m / V_dc with V_m = 166 kV * sqrt(2/3); R_L = V_m^2 / (2 P_N / 3).
  return CircuitParams{};
}

std::string_view to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::OpenLoop: return "open";
    case ControlMode::AcVoltageLoop: return "acv";
    case ControlMode::CircCurrentLoop: return "ccc";
    case ControlMode::AcVoltagePlusCirc: return "acv+ccc";
  }
  return "open";
}

std::optional<ControlMode> parse_control_mode(std::string_view text) {
  if (text == "open") return ControlMode::OpenLoop;
  if (text == "acv") return ControlMode::AcVoltageLoop;
  if (text == "ccc") return ControlMode::CircCurrentLoop;
  if (text == "acv+ccc") return ControlMode::AcVoltagePlusCirc;
  return std::nullopt;
}

void ControlConfig::validate() const {
  require(finite_all({kpv, krv, kf, sample_period, circ_gain, resonant_damping}),
          "control gains must be finite");
  if (closed_loop()) require(sample_period > 0.0, "sample period must be positive");
  require(resonant_damping >= 0.0, "resonant damping must be non-negative");
}

InsertionIndices insertion_indices(const CircuitParams& params, double t) {
  const double w1 = params.omega1();
  const double fund = params.modulation_index * std::cos(w1 * t + params.modulation_phase);
  const double second = params.m2_index * std::cos(2.0 * w1 * t + params.m2_phase);
  return {0.5 * (1.0 - fund - second), 0.5 * (1.0 + fund - second)};
}

InsertionSpectrum insertion_spectrum(const CircuitParams& params) {
  const double w1 = params.omega1();
  auto up = hss::HarmonicCoeffs::zeros(2, w1);
  auto lo = hss::HarmonicCoeffs::zeros(2, w1);
  const Complex e1 = std::polar(params.modulation_index / 4.0, params.modulation_phase);
  const Complex e2 = std::polar(params.m2_index / 4.0, params.m2_phase);
  up.set(0, 0.5);
  lo.set(0, 0.5);
  up.set(1, -e1);
  up.set(-1, -std::conj(e1));
  lo.set(1, e1);
  lo.set(-1, std::conj(e1));
  up.set(2, -e2);
  up.set(-2, -std::conj(e2));
  lo.set(2, -e2);
  lo.set(-2, -std::conj(e2));
  return {up, lo};
}

std::map<int, ComplexMatrix> leg_coefficients(const CircuitParams& params) {
  params.validate();
  const double l = params.arm_inductance;
  const double c = params.arm_capacitance();
  const double r = params.arm_resistance;
  const auto spec = insertion_spectrum(params);

  std::map<int, ComplexMatrix> blocks;
  for (int k = -2; k <= 2; ++k) {
    const Complex nu = spec.upper[k];
    const Complex nl = spec.lower[k];
    if (k != 0 && nu == Complex{} && nl == Complex{}) continue;
    ComplexMatrix a = ComplexMatrix::Zero(kStateDim, kStateDim);
    if (k == 0) {
      a(0, 0) = -r / l;
      a(3, 3) = -r / l;
    }
    a(0, 1) = -nu / (2.0 * l);
    a(0, 2) = -nl / (2.0 * l);
    a(1, 0) = nu / c;
    a(1, 3) = nu / (2.0 * c);
    a(2, 0) = nl / c;
    a(2, 3) = -nl / (2.0 * c);
    a(3, 1) = -nu / l;
    a(3, 2) = nl / l;
    blocks.emplace(k, std::move(a));
  }
  return blocks;
}

namespace {

// Adds the load feedback -2 Z_L(j w_k)/L to the i_g row at each harmonic.
void fold_load(hss::HarmonicOperator& op, const CircuitParams& params, double omega_offset) {
  const double w1 = params.omega1();
  for (int k = -op.order(); k <= op.order(); ++k) {
    const Complex zl = params.load_impedance(omega_offset + k * w1);
    op.add_to_entry(k, kAcCurrent, k, kAcCurrent, -2.0 * zl / params.arm_inductance);
  }
}

// Steady-state coefficient at harmonic k, with the load voltage derived from i_g.
struct OpView {
  const SteadyOperatingPoint& op;
  Complex ic(int k) const { return op.circulating_current(k); }
  Complex vcu(int k) const { return op.upper_cap_voltage(k); }
  Complex vcl(int k) const { return op.lower_cap_voltage(k); }
  Complex ig(int k) const { return op.ac_current(k); }
};

// Harmonic k of df/de, where n_u = (1 - e)/2 and n_l = (1 + e)/2.
std::array<Complex, kStateDim> differential_gain(const OpView& v, int k, double l, double c) {
  return {(v.vcu(k) - v.vcl(k)) / (4.0 * l), -(v.ic(k) + 0.5 * v.ig(k)) / (2.0 * c),
          (v.ic(k) - 0.5 * v.ig(k)) / (2.0 * c), (v.vcu(k) + v.vcl(k)) / (2.0 * l)};
}

// Harmonic k of df/dd, where both n_u and n_l are raised by d.
std::array<Complex, kStateDim> common_gain(const OpView& v, int k, double l, double c) {
  return {-(v.vcu(k) + v.vcl(k)) / (2.0 * l), (v.ic(k) + 0.5 * v.ig(k)) / c,
          (v.ic(k) - 0.5 * v.ig(k)) / c, (v.vcl(k) - v.vcu(k)) / l};
}

hss::HarmonicOperator openloop_system(const CircuitParams& params, int order, double omega_p) {
  hss::HarmonicOperator sys = hss::build_toeplitz(leg_coefficients(params), order, kStateDim);
  fold_load(sys, params, omega_p);
  return sys;
}

void check_op(const CircuitParams& params, const SteadyOperatingPoint& op) {
  if (!(op.params() == params)) {
    throw InvalidArgument("operating point was computed with different circuit parameters");
  }
}

// Column-4 terms of the ac-voltage loop: modulation e_p = -(2/V_dc) G_v v_gp
// with v_gp = v_p + Z_L i_gp. Returns the operator mapping V_p (carried in
// column 0 of the k=0 block) to the state rows.
hss::HarmonicOperator add_acv_terms(hss::HarmonicOperator& sys, const CircuitParams& params,
                                    const ControlConfig& config, const SteadyOperatingPoint& op,
                                    double omega_p) {
  const int h = sys.order();
  const double l = params.arm_inductance;
  const double c = params.arm_capacitance();
  const double w1 = params.omega1();
  const double scale = -2.0 / params.dc_voltage;
  const OpView view{op};

  hss::HarmonicOperator input(h, kStateDim);
  for (int src = -h; src <= h; ++src) {
    const double w = omega_p + src * w1;
    const Complex gv = control_transfer(config, Complex{0.0, w}, w1);
    const Complex zl = params.load_impedance(w);
    input.add_to_entry(src, kAcCurrent, src, 0, -2.0 / l);
    for (int dst = -h; dst <= h; ++dst) {
      const auto b = differential_gain(view, dst - src, l, c);
      for (int i = 0; i < kStateDim; ++i) {
        if (b[i] == Complex{}) continue;
        sys.add_to_entry(dst, i, src, kAcCurrent, scale * b[i] * gv * zl);
        input.add_to_entry(dst, i, src, 0, scale * b[i] * gv);
      }
    }
  }
  return input;
}

// Column-1 terms of the circulating-current loop: n_u and n_l both raised by
// (R_a / V_dc) G_d i_cp.
void add_ccc_terms(hss::HarmonicOperator& sys, const CircuitParams& params,
                   const ControlConfig& config, const SteadyOperatingPoint& op, double omega_p) {
  const int h = sys.order();
  const double l = params.arm_inductance;
  const double c = params.arm_capacitance();
  const double w1 = params.omega1();
  const double scale = config.circ_gain / params.dc_voltage;
  if (scale == 0.0) return;
  const OpView view{op};

  for (int src = -h; src <= h; ++src) {
    const Complex gd = delay_transfer(config, Complex{0.0, omega_p + src * w1});
    for (int dst = -h; dst <= h; ++dst) {
      const auto b = common_gain(view, dst - src, l, c);
      for (int i = 0; i < kStateDim; ++i) {
        if (b[i] == Complex{}) continue;
        sys.add_to_entry(dst, i, src, kCirculatingCurrent, scale * b[i] * gd);
      }
    }
  }
}

}  // namespace

BaseHss build_base_hss(const CircuitParams& params, int order) {
  auto coeffs = leg_coefficients(params);
  auto toeplitz = hss::build_toeplitz(coeffs, order, kStateDim);
  hss::HarmonicOperator system = toeplitz;
  fold_load(system, params, 0.0);
  hss::HarmonicVector forcing(order, kStateDim);
  forcing.set(0, kCirculatingCurrent, params.dc_voltage / (2.0 * params.arm_inductance));
  return {std::move(coeffs), std::move(toeplitz), std::move(system), std::move(forcing)};
}

SteadyOperatingPoint::SteadyOperatingPoint(hss::HarmonicVector stack, CircuitParams params)
    : stack_(std::move(stack)), params_(params) {
  if (stack_.dim() != kStateDim) throw InvalidArgument("operating point must have 4 states");
}

Complex SteadyOperatingPoint::ac_voltage(int k) const {
  return params_.load_impedance(k * params_.omega1()) * ac_current(k);
}

double SteadyOperatingPoint::waveform(State s, double t) const {
  return hss::reconstruct_time(component(s), t).real();
}

SteadyOperatingPoint steady_state(const CircuitParams& params, int order) {
  auto base = build_base_hss(params, order);
  auto shift = hss::build_shift(order, kStateDim, params.omega1(), 0.0);
  return SteadyOperatingPoint(hss::solve_steady_state(base.system, shift, base.forcing), params);
}

Complex delay_transfer(const ControlConfig& config, Complex s) {
  return std::exp(-1.5 * config.sample_period * s);
}

Complex regulator_transfer(const ControlConfig& config, Complex s, double omega1) {
  Complex h = config.kf + config.kpv;
  if (config.krv != 0.0) {
    const Complex den = s * s + 2.0 * config.resonant_damping * s + omega1 * omega1;
    if (std::abs(den) <= 1e-9 * omega1 * omega1) {
      std::ostringstream msg;
      msg << "resonant controller evaluated at its pole (s = " << s << ")";
      throw PoleAtResonanceError(msg.str());
    }
    h += config.krv * s / den;
  }
  return h;
}

Complex control_transfer(const ControlConfig& config, Complex s, double omega1) {
  return regulator_transfer(config, s, omega1) * delay_transfer(config, s);
}

PerturbationModel build_openloop_perturbation(const CircuitParams& params, int order,
                                              double omega_p) {
  hss::HarmonicVector forcing(order, kStateDim);
  forcing.set(0, kAcCurrent, -2.0 / params.arm_inductance);
  return {openloop_system(params, order, omega_p), std::nullopt, std::move(forcing),
          hss::build_shift(order, kStateDim, params.omega1(), omega_p)};
}

PerturbationModel build_acv_perturbation(const CircuitParams& params, const ControlConfig& config,
                                         const SteadyOperatingPoint& op, int order,
                                         double omega_p) {
  ControlConfig acv = config;
  acv.mode = ControlMode::AcVoltageLoop;
  return build_perturbation(params, acv, op, order, omega_p);
}

PerturbationModel build_ccc_perturbation(const CircuitParams& params, const ControlConfig& config,
                                         const SteadyOperatingPoint& op, int order,
                                         double omega_p) {
  ControlConfig ccc = config;
  ccc.mode = ControlMode::CircCurrentLoop;
  return build_perturbation(params, ccc, op, order, omega_p);
}

PerturbationModel build_perturbation(const CircuitParams& params, const ControlConfig& config,
                                     const SteadyOperatingPoint& op, int order, double omega_p,
                                     PerturbationPort port) {
  params.validate();
  config.validate();
  if (config.closed_loop()) check_op(params, op);

  auto sys = openloop_system(params, order, omega_p);
  std::optional<hss::HarmonicOperator> input;
  hss::HarmonicVector forcing(order, kStateDim);

  if (config.ac_loop()) {
    auto b = add_acv_terms(sys, params, config, op, omega_p);
    if (port == PerturbationPort::AcTerminal) {
      input = std::move(b);
      for (int i = 0; i < kStateDim; ++i) forcing.set(0, i, 1.0);
    }
  }
  if (config.circ_loop()) add_ccc_terms(sys, params, config, op, omega_p);

  if (!input) {
    if (port == PerturbationPort::AcTerminal) {
      forcing.set(0, kAcCurrent, -2.0 / params.arm_inductance);
    } else {
      forcing.set(0, kCirculatingCurrent, 1.0 / (2.0 * params.arm_inductance));
    }
  }
  return {std::move(sys), std::move(input), std::move(forcing),
          hss::build_shift(order, kStateDim, params.omega1(), omega_p)};
}

}  // namespace mmchss::mmc
