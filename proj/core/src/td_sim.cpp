#include "mmchss/td_sim.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mmchss::sim {

namespace {

using State = std::array<double, 4>;

// Integer ratio a / b, or -1 when it is not (close to) an integer.
long long integer_ratio(double a, double b) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-6 * std::max(1.0, r)) return -1;
  return static_cast<long long>(n);
}

// Averaged leg equations; the load is folded algebraically into the i_g row.
class Leg {
 public:
  explicit Leg(const mmc::CircuitParams& p)
      : p_(p),
        l_(p.arm_inductance),
        c_(p.arm_capacitance()),
        r_(p.arm_resistance),
        rl_(p.load_resistance),
        ll_(p.load_inductance) {}

  struct Inputs {
    double e_fb = 0.0;   // ac-loop modulation correction
    double delta = 0.0;  // circulating-loop common-mode insertion
    double v_p = 0.0;    // series source at the ac terminal
    double v_dc = 0.0;   // dc-bus voltage
  };

  struct Eval {
    State dy;
    double v_g;
    double n_u, n_l;
    double n_u0, n_l0;
  };

  Eval eval(double t, const State& y, const Inputs& in) const {
    const auto n0 = mmc::insertion_indices(p_, t);
    const double n_u = n0.upper - 0.5 * in.e_fb + in.delta;
    const double n_l = n0.lower + 0.5 * in.e_fb + in.delta;
    const double i_c = y[0], v_cu = y[1], v_cl = y[2], i_g = y[3];
    Eval e;
    e.dy[0] = (in.v_dc - 2.0 * r_ * i_c - n_u * v_cu - n_l * v_cl) / (2.0 * l_);
    e.dy[1] = n_u * (i_c + 0.5 * i_g) / c_;
    e.dy[2] = n_l * (i_c - 0.5 * i_g) / c_;
    e.dy[3] = (-(r_ + 2.0 * rl_) * i_g - n_u * v_cu + n_l * v_cl - 2.0 * in.v_p) / (l_ + 2.0 * ll_);
    e.v_g = in.v_p + rl_ * i_g + ll_ * e.dy[3];
    e.n_u = n_u;
    e.n_l = n_l;
    e.n_u0 = n0.upper;
    e.n_l0 = n0.lower;
    return e;
  }

 private:
  const mmc::CircuitParams& p_;
  double l_, c_, r_, rl_, ll_;
};

// Tustin (prewarped at w1) realization of K_rv s / (s^2 + 2 w_c s + w1^2).
class ResonantFilter {
 public:
  ResonantFilter(double krv, double damping, double omega1, double ts) {
    const double k = omega1 / std::tan(0.5 * omega1 * ts);
    const double a0 = k * k + 2.0 * damping * k + omega1 * omega1;
    b0_ = krv * k / a0;
    b2_ = -b0_;
    a1_ = (2.0 * omega1 * omega1 - 2.0 * k * k) / a0;
    a2_ = (k * k - 2.0 * damping * k + omega1 * omega1) / a0;
  }

  double step(double x) {
    const double y = b0_ * x + s1_;
    s1_ = -a1_ * y + s2_;
    s2_ = b2_ * x - a2_ * y;
    return y;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double s1_ = 0.0, s2_ = 0.0;
};

struct Reference {
  std::vector<double> v_g;  // one fundamental period sampled at T_s
  std::vector<double> i_c;
};

// Discrete regulators sampled every `ratio` integration steps. Outputs are
// delayed by 1.5 T_s and linearly interpolated between samples.
class Controller {
 public:
  Controller(const mmc::CircuitParams& p, const mmc::ControlConfig& c, const Reference& ref,
             long long ratio)
      : c_(c),
        ref_(ref),
        ratio_(static_cast<double>(ratio)),
        vdc_(p.dc_voltage),
        resonant_(c.krv, c.resonant_damping, p.omega1(), c.sample_period) {}

  void sample(double v_g, double i_c) {
    const std::size_t k = e_.size() % ref_.v_g.size();
    double e = 0.0;
    double d = 0.0;
    if (c_.ac_loop()) {
      const double err = ref_.v_g[k] - v_g;
      const double res = c_.krv != 0.0 ? resonant_.step(err) : 0.0;
      e = 2.0 / vdc_ * ((c_.kf + c_.kpv) * err + res);
    }
    if (c_.circ_loop()) d = c_.circ_gain / vdc_ * (i_c - ref_.i_c[k]);
    e_.push_back(e);
    d_.push_back(d);
  }

  // Position is measured in integration steps from t = 0.
  void outputs(double position, double& e_fb, double& delta) const {
    const double x = (position - 1.5 * ratio_) / ratio_;
    if (x < 0.0) {
      // first sample enters at the start of the delay line
      if (x <= -1.0 || e_.empty()) {
        e_fb = delta = 0.0;
        return;
      }
      const double f = x + 1.0;
      e_fb = f * e_[0];
      delta = f * d_[0];
      return;
    }
    const auto i0 = static_cast<std::size_t>(std::floor(x));
    const double f = x - static_cast<double>(i0);
    e_fb = at(e_, i0) + f * (at(e_, i0 + 1) - at(e_, i0));
    delta = at(d_, i0) + f * (at(d_, i0 + 1) - at(d_, i0));
  }

 private:
  static double at(const std::vector<double>& v, std::size_t i) {
    return v.empty() ? 0.0 : v[std::min(i, v.size() - 1)];
  }

  const mmc::ControlConfig& c_;
  const Reference& ref_;
  double ratio_;
  double vdc_;
  ResonantFilter resonant_;
  std::vector<double> e_;
  std::vector<double> d_;
};

struct RunOutput {
  TimeSeries series;
  State final_state;
};

class Simulator {
 public:
  Simulator(const mmc::CircuitParams& params, const mmc::ControlConfig& control,
            const SimConfig& sim)
      : params_(params), control_(control), sim_(sim), leg_(params_) {
    params_.validate();
    control_.validate();
    sim_.validate(params_, control_);
    dt_ = sim_.resolved_dt(params_);
    steps_per_cycle_ = integer_ratio(1.0 / params_.fundamental_hz, dt_);
    initial_ = {0.0, params_.dc_voltage, params_.dc_voltage, 0.0};
    if (control_.closed_loop()) capture_reference();
  }

  TimeSeries run(const std::optional<Perturbation>& p) const {
    const double f = p ? p->freq_hz : (sim_.freq_hz > 0.0 ? sim_.freq_hz : params_.fundamental_hz);
    const double window = sim_.measure_cycles * common_period(params_.fundamental_hz, f);
    return integrate(p, initial_, control_.closed_loop(), sim_.settle_cycles, window).series;
  }

 private:
  void capture_reference() {
    const double period = 1.0 / params_.fundamental_hz;
    auto out = integrate(std::nullopt, initial_, false, sim_.settle_cycles, period);
    const long long ratio = integer_ratio(control_.sample_period, dt_);
    for (std::size_t i = 0; i < out.series.size(); i += static_cast<std::size_t>(ratio)) {
      reference_.v_g.push_back(out.series.v_g[i]);
      reference_.i_c.push_back(out.series.i_c[i]);
    }
    initial_ = out.final_state;
  }

  RunOutput integrate(const std::optional<Perturbation>& p, State y, bool closed,
                      int settle_cycles, double window) const {
    const long long settle_steps = settle_cycles * steps_per_cycle_;
    const long long window_steps = std::llround(window / dt_);
    const long long total = settle_steps + window_steps;
    const double vdc = params_.dc_voltage;
    const double wp = p ? kTwoPi * p->freq_hz : 0.0;
    const bool ac_port = p && p->port == mmc::PerturbationPort::AcTerminal;
    const bool dc_port = p && p->port == mmc::PerturbationPort::DcBus;
    const double amp = p ? p->amplitude : 0.0;
    const double phase = p ? p->phase : 0.0;

    std::optional<Controller> ctl;
    long long ratio = 1;
    if (closed) {
      ratio = integer_ratio(control_.sample_period, dt_);
      ctl.emplace(params_, control_, reference_, ratio);
    }

    auto inputs = [&](double pos) {
      Leg::Inputs in;
      const double t = pos * dt_;
      const double src = amp * std::cos(wp * t + phase);
      in.v_p = ac_port ? src : 0.0;
      in.v_dc = vdc + (dc_port ? src : 0.0);
      if (ctl) ctl->outputs(pos, in.e_fb, in.delta);
      return in;
    };

    RunOutput out;
    TimeSeries& ts = out.series;
    ts.dt = dt_;
    const auto n_rec = static_cast<std::size_t>(window_steps);
    for (auto* v : {&ts.t, &ts.i_c, &ts.v_cu, &ts.v_cl, &ts.i_g, &ts.v_g, &ts.n_u, &ts.n_l,
                    &ts.v_dc, &ts.path_voltage}) {
      v->reserve(n_rec);
    }

    // two trailing settle cycles for the periodicity measure
    std::vector<State> prev_cycle;
    std::vector<State> last_cycle;
    const long long watch_from = settle_steps - 2 * steps_per_cycle_;

    for (long long n = 0; n < total; ++n) {
      const double pos = static_cast<double>(n);
      const double t = pos * dt_;

      if (ctl && n % ratio == 0) {
        const auto e = leg_.eval(t, y, inputs(pos));
        ctl->sample(e.v_g, y[0]);
      }

      if (n >= settle_steps) {
        const auto in = inputs(pos);
        const auto e = leg_.eval(t, y, in);
        ts.t.push_back(t);
        ts.i_c.push_back(y[0]);
        ts.v_cu.push_back(y[1]);
        ts.v_cl.push_back(y[2]);
        ts.i_g.push_back(y[3]);
        ts.v_g.push_back(e.v_g);
        ts.n_u.push_back(e.n_u);
        ts.n_l.push_back(e.n_l);
        ts.v_dc.push_back(in.v_dc);
        ts.path_voltage.push_back(in.v_dc - (e.n_u0 * y[1] + e.n_l0 * y[2]));
      } else if (watch_from >= 0 && n >= watch_from) {
        (n < watch_from + steps_per_cycle_ ? prev_cycle : last_cycle).push_back(y);
      }

      const auto k1 = leg_.eval(t, y, inputs(pos)).dy;
      State y2, y3, y4;
      for (int i = 0; i < 4; ++i) y2[i] = y[i] + 0.5 * dt_ * k1[i];
      const auto mid = inputs(pos + 0.5);
      const auto k2 = leg_.eval(t + 0.5 * dt_, y2, mid).dy;
      for (int i = 0; i < 4; ++i) y3[i] = y[i] + 0.5 * dt_ * k2[i];
      const auto k3 = leg_.eval(t + 0.5 * dt_, y3, mid).dy;
      for (int i = 0; i < 4; ++i) y4[i] = y[i] + dt_ * k3[i];
      const auto k4 = leg_.eval(t + dt_, y4, inputs(pos + 1.0)).dy;
      for (int i = 0; i < 4; ++i) {
        y[i] += dt_ / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(y[i])) {
          std::ostringstream msg;
          msg << "simulation diverged at t = " << t + dt_ << " s";
          throw DivergenceError(msg.str(), t + dt_);
        }
      }
    }

    ts.periodic_change = periodicity(prev_cycle, last_cycle);
    out.final_state = y;
    return out;
  }

  double periodicity(const std::vector<State>& a, const std::vector<State>& b) const {
    if (a.empty() || a.size() != b.size()) return 0.0;
    const double i_nom = params_.dc_voltage / (params_.omega1() * params_.arm_inductance);
    const std::array<double, 4> nominal{i_nom, params_.dc_voltage, params_.dc_voltage, i_nom};
    double worst = 0.0;
    for (int s = 0; s < 4; ++s) {
      double diff2 = 0.0, val2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        diff2 += (b[i][s] - a[i][s]) * (b[i][s] - a[i][s]);
        val2 += b[i][s] * b[i][s];
      }
      const double scale = std::max(std::sqrt(val2 / b.size()), 1e-9 * nominal[s]);
      worst = std::max(worst, std::sqrt(diff2 / b.size()) / scale);
    }
    return worst;
  }

  mmc::CircuitParams params_;
  mmc::ControlConfig control_;
  SimConfig sim_;
  Leg leg_;
  double dt_ = 0.0;
  long long steps_per_cycle_ = 0;
  State initial_{};
  Reference reference_;
};

}  // namespace

double SimConfig::resolved_dt(const mmc::CircuitParams& params) const {
  return dt > 0.0 ? dt : 1.0 / (2000.0 * params.fundamental_hz);
}

double SimConfig::resolved_amplitude(const mmc::CircuitParams& params) const {
  return amplitude > 0.0 ? amplitude : 0.02 * params.dc_voltage / 2.0;
}

void SimConfig::validate(const mmc::CircuitParams& params,
                         const mmc::ControlConfig& control) const {
  const double period = 1.0 / params.fundamental_hz;
  const double h = resolved_dt(params);
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be non-negative");
  if (h > period / 200.0 * (1.0 + 1e-12)) throw InvalidArgument("dt must not exceed T1/200");
  if (integer_ratio(period, h) < 0) throw InvalidArgument("T1 must be an integer multiple of dt");
  if (settle_cycles < 0) throw InvalidArgument("settle_cycles must be non-negative");
  if (measure_cycles < 1) throw InvalidArgument("measure_cycles must be >= 1");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw InvalidArgument("perturbation amplitude must be non-negative");
  }
  if (!(freq_hz >= 0.0) || !std::isfinite(freq_hz)) {
    throw InvalidArgument("perturbation frequency must be non-negative");
  }
  if (control.closed_loop()) {
    if (integer_ratio(control.sample_period, h) < 0) {
      throw InvalidArgument("control sample period must be an integer multiple of dt");
    }
    if (integer_ratio(period, control.sample_period) < 0) {
      throw InvalidArgument("T1 must be an integer multiple of the control sample period");
    }
  }
}

const std::vector<double>& TimeSeries::signal(Signal s) const {
  switch (s) {
    case Signal::CirculatingCurrent: return i_c;
    case Signal::UpperCapVoltage: return v_cu;
    case Signal::LowerCapVoltage: return v_cl;
    case Signal::AcCurrent: return i_g;
    case Signal::AcVoltage: return v_g;
    case Signal::UpperInsertion: return n_u;
    case Signal::LowerInsertion: return n_l;
    case Signal::DcVoltage: return v_dc;
    case Signal::CirculatingPathVoltage: return path_voltage;
  }
  return i_c;
}

double common_period(double fundamental_hz, double freq_hz) {
  if (!(fundamental_hz > 0.0) || !(freq_hz > 0.0)) {
    throw InvalidArgument("frequencies must be positive");
  }
  const double ratio = freq_hz / fundamental_hz;
  for (int q = 1; q <= 1000; ++q) {
    const double r = q * ratio;
    if (std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r)) return q / fundamental_hz;
  }
  std::ostringstream msg;
  msg << freq_hz << " Hz is not commensurate with " << fundamental_hz << " Hz";
  throw InvalidArgument(msg.str());
}

TimeSeries simulate(const mmc::CircuitParams& params, const mmc::ControlConfig& control,
                    const SimConfig& sim, const std::optional<Perturbation>& perturbation) {
  return Simulator(params, control, sim).run(perturbation);
}

Complex extract_phasor(std::span<const double> t, std::span<const double> x, double dt,
                       double freq_hz) {
  if (t.size() != x.size() || x.empty()) throw InvalidArgument("empty or mismatched series");
  if (!(freq_hz > 0.0)) throw InvalidArgument("phasor frequency must be positive");
  const double window = dt * static_cast<double>(x.size());
  const double cycles = freq_hz * window;
  if (std::abs(cycles - std::round(cycles)) > 1e-6 * std::max(1.0, cycles)) {
    std::ostringstream msg;
    msg << "window of " << window << " s does not span whole periods of " << freq_hz << " Hz";
    throw InvalidArgument(msg.str());
  }
  const double w = kTwoPi * freq_hz;
  Complex acc{};
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, -w * t[n]);
  return 2.0 / window * acc * dt;
}

Complex extract_phasor(const TimeSeries& series, Signal signal, double freq_hz) {
  return extract_phasor(series.t, series.signal(signal), series.dt, freq_hz);
}

namespace {

struct DirectResponse {
  Complex first;
  Complex second;
};

// Phasors at f of two signals caused by the perturbation alone. At harmonic
// bins the response to the conjugate half of the source folds onto f; the
// quadrature run separates it: X(phi) = a (e^{j phi} D + e^{-j phi} E).
DirectResponse direct_response(const mmc::CircuitParams& params, const mmc::ControlConfig& control,
                               const SimConfig& sim, double freq_hz, mmc::PerturbationPort port,
                               Signal first, Signal second) {
  const Simulator simulator(params, control, sim);
  const auto base = simulator.run(std::nullopt);
  const double amp = sim.resolved_amplitude(params);
  auto delta = [&](const TimeSeries& s, Signal sig) {
    return extract_phasor(s, sig, freq_hz) - extract_phasor(base, sig, freq_hz);
  };

  const auto in_phase = simulator.run(Perturbation{freq_hz, amp, port, 0.0});
  DirectResponse r{delta(in_phase, first), delta(in_phase, second)};
  if (integer_ratio(freq_hz, params.fundamental_hz) > 0) {
    const auto quad = simulator.run(Perturbation{freq_hz, amp, port, 0.5 * kPi});
    r.first = 0.5 * (r.first - kJ * delta(quad, first));
    r.second = 0.5 * (r.second - kJ * delta(quad, second));
  }
  return r;
}

}  // namespace

impedance::ImpedancePoint measure_impedance(const mmc::CircuitParams& params,
                                            const mmc::ControlConfig& control,
                                            const SimConfig& sim) {
  const double f = sim.freq_hz;
  if (!(f > 0.0)) throw InvalidArgument("perturbation frequency must be positive");
  const auto r = direct_response(params, control, sim, f, mmc::PerturbationPort::AcTerminal,
                                 Signal::AcVoltage, Signal::AcCurrent);
  const double zl = std::max(std::abs(params.load_impedance(kTwoPi * f)), 1.0);
  if (!(std::abs(r.second) >= 1e-15 * sim.resolved_amplitude(params) / zl)) {
    throw DegenerateResponseError("measured perturbation current vanishes");
  }
  return {f, -r.first / r.second, control.mode, 0};
}

std::vector<impedance::CirculatingSample> measure_circulating_path(
    const mmc::CircuitParams& params, const mmc::ControlConfig& control, const SimConfig& sim,
    std::span<const double> freqs_hz) {
  std::vector<impedance::CirculatingSample> out;
  for (double f : freqs_hz) {
    if (!(f > 0.0)) throw InvalidArgument("perturbation frequency must be positive");
    SimConfig s = sim;
    s.freq_hz = f;
    const auto r = direct_response(params, control, s, f, mmc::PerturbationPort::DcBus,
                                   Signal::CirculatingPathVoltage, Signal::CirculatingCurrent);
    out.push_back({kTwoPi * f, r.first, r.second});
  }
  return out;
}

void write_trajectory_csv(const TimeSeries& series, std::ostream& out) {
  out << "t_s,i_c_a,v_cu_v,v_cl_v,i_g_a,v_g_v\n";
  out << std::setprecision(10);
  for (std::size_t n = 0; n < series.size(); ++n) {
    out << series.t[n] << ',' << series.i_c[n] << ',' << series.v_cu[n] << ',' << series.v_cl[n]
        << ',' << series.i_g[n] << ',' << series.v_g[n] << '\n';
  }
}

}  // namespace mmchss::sim
