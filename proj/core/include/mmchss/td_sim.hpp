#pragma once

// Nonlinear time-domain simulation of the averaged phase leg, used as an
// independent oracle for the harmonic-domain models.
//
// Integrates the 4-state leg equations with fixed-step RK4. Closed loops run
// in discrete time at T_s: the regulator output is delayed by 1.5 T_s and
// linearly interpolated between samples. Both loops regulate around the
// open-loop periodic steady state, captured from a preliminary open-loop
// run, so the closed-loop operating point equals the open-loop one.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mmchss/impedance.hpp"

namespace mmchss::sim {

struct SimConfig {
  double dt = 0.0;          // s; 0 selects T1 / 2000
  int settle_cycles = 150;  // fundamental periods integrated before recording
  int measure_cycles = 1;   // common periods of f1 and f_p in the DFT window
  double amplitude = 0.0;   // V; 0 selects 2% of V_dc / 2
  double freq_hz = 35.0;    // perturbation frequency for measure_impedance

  double resolved_dt(const mmc::CircuitParams& params) const;
  double resolved_amplitude(const mmc::CircuitParams& params) const;
  void validate(const mmc::CircuitParams& params, const mmc::ControlConfig& control) const;

  bool operator==(const SimConfig&) const = default;
};

struct Perturbation {
  double freq_hz;
  double amplitude;  // V, peak
  mmc::PerturbationPort port = mmc::PerturbationPort::AcTerminal;
  double phase = 0.0;  // rad; source is amplitude * cos(2 pi f t + phase)
};

enum class Signal {
  CirculatingCurrent,
  UpperCapVoltage,
  LowerCapVoltage,
  AcCurrent,
  AcVoltage,
  UpperInsertion,
  LowerInsertion,
  DcVoltage,
  CirculatingPathVoltage,  // v_dc - (n_u0 v_cu + n_l0 v_cl), open-loop indices
};

/// Uniformly sampled trajectory over the measurement window.
struct TimeSeries {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> i_c, v_cu, v_cl, i_g, v_g;
  std::vector<double> n_u, n_l, v_dc, path_voltage;
  /// Max over states of RMS(x(t) - x(t - T1)) / RMS(x) over the last settling cycle.
  double periodic_change = 0.0;

  std::size_t size() const { return t.size(); }
  double window() const { return dt * static_cast<double>(t.size()); }
  const std::vector<double>& signal(Signal s) const;
};

/// Shortest window spanning whole periods of both f1 and f (multiple of T1).
/// Throws InvalidArgument when no such window up to 1000 T1 exists.
double common_period(double fundamental_hz, double freq_hz);

/// Integrates settle_cycles T1 then records measure_cycles common periods
/// (of f1 and the perturbation frequency, or sim.freq_hz without one).
TimeSeries simulate(const mmc::CircuitParams& params, const mmc::ControlConfig& control,
                    const SimConfig& sim, const std::optional<Perturbation>& perturbation);

/// (2/W) sum x(t_n) exp(-j 2 pi f t_n) dt over the window W.
Complex extract_phasor(const TimeSeries& series, Signal signal, double freq_hz);
Complex extract_phasor(std::span<const double> t, std::span<const double> x, double dt,
                       double freq_hz);

/// Baseline and perturbed runs at sim.freq_hz; Z = -dV_g / dI_g. When f_p is
/// a harmonic of f1 the mirrored sideband lands in the same DFT bin, so a
/// second run in quadrature separates the direct response.
impedance::ImpedancePoint measure_impedance(const mmc::CircuitParams& params,
                                            const mmc::ControlConfig& control,
                                            const SimConfig& sim);

/// Dc-bus injection at each frequency; circulating-path voltage and i_c phasors.
std::vector<impedance::CirculatingSample> measure_circulating_path(
    const mmc::CircuitParams& params, const mmc::ControlConfig& control, const SimConfig& sim,
    std::span<const double> freqs_hz);

/// CSV with header t_s,i_c_a,v_cu_v,v_cl_v,i_g_a,v_g_v.
void write_trajectory_csv(const TimeSeries& series, std::ostream& out);

}  // namespace mmchss::sim
