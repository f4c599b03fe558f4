#include "mmchss/impedance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmchss/parallel.hpp"

namespace mmchss::impedance {

void FrequencyGrid::validate() const {
  if (!(start_hz > 0.0) || !std::isfinite(start_hz)) throw InvalidArgument("grid start must be > 0");
  if (!(step_hz > 0.0) || !std::isfinite(step_hz)) throw InvalidArgument("grid step must be > 0");
  if (!(stop_hz >= start_hz) || !std::isfinite(stop_hz)) {
    throw InvalidArgument("grid stop must be >= start");
  }
}

std::vector<double> FrequencyGrid::frequencies() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((stop_hz - start_hz) / step_hz + 1e-9)) + 1;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = start_hz + static_cast<double>(i) * step_hz;
  return f;
}

Complex model_impedance(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                        const mmc::SteadyOperatingPoint& op, double omega_p, int order) {
  const auto model = mmc::build_perturbation(params, config, op, order, omega_p);
  const auto xp = hss::solve_perturbation(model.system, model.input, model.shift, model.forcing);

  const Complex vp = 1.0;
  const Complex zl = params.load_impedance(omega_p);
  const Complex igp = xp(0, mmc::kAcCurrent);
  if (!(std::abs(igp) >= 1e-15 * std::abs(vp) / std::max(std::abs(zl), 1.0))) {
    throw DegenerateResponseError("perturbation current vanishes; impedance undefined");
  }
  const Complex vgp = vp + zl * igp;
  return -vgp / igp;
}

ImpedancePoint impedance_at(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                            const mmc::SteadyOperatingPoint& op, double freq_hz, int order) {
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
    throw InvalidArgument("perturbation frequency must be positive");
  }
  if (config.has_resonant_pole() && hits_resonant_pole(freq_hz, params.fundamental_hz, order)) {
    // A sideband sits on the PR pole. The regulator error there is driven
    // to zero and Z stays finite; the error term is odd in the offset.
    const double d = kTwoPi * kPoleOffsetHz;
    const double w = kTwoPi * freq_hz;
    const Complex z = 0.5 * (model_impedance(params, config, op, w - d, order) +
                             model_impedance(params, config, op, w + d, order));
    return {freq_hz, z, config.mode, order};
  }
  const Complex z = model_impedance(params, config, op, kTwoPi * freq_hz, order);
  return {freq_hz, z, config.mode, order};
}

bool hits_resonant_pole(double freq_hz, double fundamental_hz, int order) {
  const double ratio = freq_hz / fundamental_hz;
  const double n = std::round(ratio);
  return std::abs(ratio - n) < 1e-9 && n >= 1.0 && n <= order + 1;
}

SweepResult sweep(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                  const FrequencyGrid& grid, int order, const SweepOptions& options) {
  params.validate();
  config.validate();
  const auto op = mmc::steady_state(params, order);

  SweepResult result;
  result.grid = grid;
  std::vector<double> retained;
  for (double f : grid.frequencies()) {
    const bool guarded = config.has_resonant_pole() &&
                         std::abs(f - params.fundamental_hz) <= options.guard_hz + 1e-9;
    if (guarded) {
      result.excluded_hz.push_back(f);
    } else {
      retained.push_back(f);
    }
  }

  std::vector<std::optional<ImpedancePoint>> points(retained.size());
  std::vector<std::string> errors(retained.size());
  parallel_for(retained.size(), worker_count(options.threads), [&](std::size_t i) {
    try {
      points[i] = impedance_at(params, config, op, retained[i], order);
    } catch (const NumericalError& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (points[i]) {
      result.points.push_back(*points[i]);
    } else {
      result.failures.push_back({retained[i], errors[i]});
    }
  }
  if (result.failures.size() * 10 > retained.size()) {
    std::ostringstream msg;
    msg << "sweep failed at " << result.failures.size() << " of " << retained.size()
        << " points; first: " << result.failures.front().freq_hz << " Hz: "
        << result.failures.front().reason;
    throw NumericalError(msg.str());
  }
  return result;
}

namespace {

// Vertex of the parabola through (x0,y0), (x1,y1), (x2,y2).
std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2,
                                          double y2) {
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double a = (d1 - d0) / (x2 - x0);
  if (a == 0.0) return {x1, y1};
  const double b = d0 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  const double yv = y0 + (xv - x0) * (d0 + a * (xv - x1));
  return {xv, yv};
}

}  // namespace

std::vector<Resonance> find_resonances(std::span<const ImpedancePoint> points,
                                       double max_gap_hz) {
  std::vector<Resonance> out;
  if (points.size() < 3) return out;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const auto& p0 = points[i - 1];
    const auto& p1 = points[i];
    const auto& p2 = points[i + 1];
    if (p1.freq_hz - p0.freq_hz > max_gap_hz || p2.freq_hz - p1.freq_hz > max_gap_hz) continue;
    const double m0 = std::abs(p0.z);
    const double m1 = std::abs(p1.z);
    const double m2 = std::abs(p2.z);
    ResonanceKind kind;
    if (m1 > m0 && m1 > m2) {
      kind = ResonanceKind::Peak;
    } else if (m1 < m0 && m1 < m2) {
      kind = ResonanceKind::Notch;
    } else {
      continue;
    }
    if (m0 <= 0.0 || m1 <= 0.0 || m2 <= 0.0) {
      out.push_back({p1.freq_hz, kind, m1});
      continue;
    }
    const auto [f, logm] = parabola_vertex(p0.freq_hz, std::log(m0), p1.freq_hz, std::log(m1),
                                           p2.freq_hz, std::log(m2));
    out.push_back({f, kind, std::exp(logm)});
  }
  return out;
}

std::vector<Resonance> find_resonances(const SweepResult& sweep) {
  return find_resonances(sweep.points, 1.5 * sweep.grid.step_hz);
}

CirculatingPathFit fit_circulating_path(std::span<const CirculatingSample> samples) {
  if (samples.empty()) throw InvalidArgument("no circulating-path samples");
  // V = 2 I R + 2 j w I L, split into real and imaginary rows.
  Eigen::MatrixXd a(2 * samples.size(), 2);
  Eigen::VectorXd b(2 * samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Complex cr = 2.0 * samples[i].current;
    const Complex cl = 2.0 * kJ * samples[i].omega * samples[i].current;
    const auto r = static_cast<Eigen::Index>(2 * i);
    a(r, 0) = cr.real();
    a(r, 1) = cl.real();
    a(r + 1, 0) = cr.imag();
    a(r + 1, 1) = cl.imag();
    b(r) = samples[i].path_voltage.real();
    b(r + 1) = samples[i].path_voltage.imag();
  }
  const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
  return {x(0), x(1)};
}

std::vector<CirculatingSample> circulating_path_response(const mmc::CircuitParams& params,
                                                         const mmc::ControlConfig& config,
                                                         const mmc::SteadyOperatingPoint& op,
                                                         std::span<const double> freqs_hz,
                                                         int order) {
  const auto n = mmc::insertion_spectrum(params);
  std::vector<CirculatingSample> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    const double w = kTwoPi * f;
    const auto model =
        mmc::build_perturbation(params, config, op, order, w, mmc::PerturbationPort::DcBus);
    const auto xp = hss::solve_perturbation(model.system, model.input, model.shift, model.forcing);
    Complex inserted{};
    for (int l = -2; l <= 2; ++l) {
      inserted += n.upper[-l] * xp(l, mmc::kUpperCapVoltage) +
                  n.lower[-l] * xp(l, mmc::kLowerCapVoltage);
    }
    out.push_back({w, 1.0 - inserted, xp(0, mmc::kCirculatingCurrent)});
  }
  return out;
}

}  // namespace mmchss::impedance
