#pragma once

// Ac-side small-signal impedance from lifted perturbation solves:
// Z(j w_p) = -V_gp / I_gp with v_gp = v_p + Z_L i_gp.

#include <span>
#include <string>
#include <vector>

#include "mmchss/mmc_model.hpp"

namespace mmchss::impedance {

struct ImpedancePoint {
  double freq_hz = 0.0;
  Complex z{};
  mmc::ControlMode mode = mmc::ControlMode::OpenLoop;
  int order = 0;
};

struct FrequencyGrid {
  double start_hz = 5.0;
  double stop_hz = 500.0;
  double step_hz = 1.0;

  void validate() const;
  std::vector<double> frequencies() const;

  bool operator==(const FrequencyGrid&) const = default;
};

struct SweepOptions {
  double guard_hz = 2.0;  // half-width around f1 excluded when an ideal PR is active
  unsigned threads = 0;   // 0: hardware concurrency, capped by MMC_HSS_THREADS
};

struct PointFailure {
  double freq_hz;
  std::string reason;
};

struct SweepResult {
  std::vector<ImpedancePoint> points;  // strictly increasing frequency
  FrequencyGrid grid;
  std::vector<double> excluded_hz;     // PR guard band around f1
  std::vector<PointFailure> failures;  // per-point errors, skipped
};

/// Impedance at angular frequency w_p (may be negative) with unit V_p.
Complex model_impedance(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                        const mmc::SteadyOperatingPoint& op, double omega_p, int order);

/// Offset used to approach a resonant-pole sideband from both sides.
inline constexpr double kPoleOffsetHz = 1e-3;

/// When a sideband w_p + k w1 lands on an ideal PR pole the value is the
/// two-sided limit, taken as the mean of Z at f_p -+ kPoleOffsetHz.
ImpedancePoint impedance_at(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                            const mmc::SteadyOperatingPoint& op, double freq_hz, int order);

/// True when w_p + k w1 = +-w1 for some |k| <= order, i.e. f_p is a multiple of
/// f1 no larger than (order + 1) f1.
bool hits_resonant_pole(double freq_hz, double fundamental_hz, int order);

/// Points within guard_hz of f1 are dropped when an ideal PR is active;
/// other pole sidebands use the two-sided limit. Throws NumericalError if
/// more than 10% of the retained points fail.
SweepResult sweep(const mmc::CircuitParams& params, const mmc::ControlConfig& config,
                  const FrequencyGrid& grid, int order, const SweepOptions& options = {});

enum class ResonanceKind { Peak, Notch };

struct Resonance {
  double freq_hz;
  ResonanceKind kind;
  double magnitude;  // Ohm, at the refined extremum
};

/// Three-point local extrema of |Z| refined by a parabola through log|Z|.
/// Triples spanning a gap wider than `max_gap_hz` are skipped.
std::vector<Resonance> find_resonances(std::span<const ImpedancePoint> points,
                                       double max_gap_hz);
std::vector<Resonance> find_resonances(const SweepResult& sweep);

/// One excitation of the circulating path: phasors at w of the path voltage
/// v_dc - (n_u0 v_cu + n_l0 v_cl) and of i_c.
struct CirculatingSample {
  double omega;
  Complex path_voltage;
  Complex current;
};

struct CirculatingPathFit {
  double resistance;  // R_eff per arm, Ohm
  double inductance;  // L_eff per arm, H
};

/// Least-squares fit of V = 2 (R + j w L) I over the samples.
CirculatingPathFit fit_circulating_path(std::span<const CirculatingSample> samples);

/// Analytic samples from a unit dc-bus perturbation at each frequency.
std::vector<CirculatingSample> circulating_path_response(const mmc::CircuitParams& params,
                                                         const mmc::ControlConfig& config,
                                                         const mmc::SteadyOperatingPoint& op,
                                                         std::span<const double> freqs_hz,
                                                         int order);

}  // namespace mmchss::impedance
