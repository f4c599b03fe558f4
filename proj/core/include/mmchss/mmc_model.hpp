#pragma once

// Average-value model of one MMC phase leg in the harmonic domain.
//
// State x = [i_c, v_cu, v_cl, i_g]: circulating current, upper/lower arm
// sum capacitor voltages and ac output current. The leg feeds a series
// R_L + jwL_L load through the ac terminal, optionally with a small voltage
// source v_p in series with the load.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mmchss/hss.hpp"

namespace mmchss::mmc {

inline constexpr int kStateDim = 4;

enum State : int { kCirculatingCurrent = 0, kUpperCapVoltage = 1, kLowerCapVoltage = 2, kAcCurrent = 3 };

struct CircuitParams {
  double dc_voltage = 320e3;        // V
  double arm_inductance = 0.36;     // H
  double arm_resistance = 1.0;      // Ohm
  double sm_capacitance = 140e-6;   // F
  int sm_per_arm = 20;
  double fundamental_hz = 50.0;
  double modulation_index = 0.847;  // m, fundamental
  double modulation_phase = 0.0;    // rad
  double m2_index = 0.0;            // second-harmonic modulation
  double m2_phase = 0.0;            // rad
  double load_resistance = 550.0;   // Ohm, per phase
  double load_inductance = 0.0;     // H, per phase

  double arm_capacitance() const { return sm_capacitance / sm_per_arm; }
  double omega1() const { return kTwoPi * fundamental_hz; }
  Complex load_impedance(double omega) const { return {load_resistance, omega * load_inductance}; }

  void validate() const;

  bool operator==(const CircuitParams&) const = default;
};

/// Scaled simulation case: 50 MW, 320 kV dc, 166 kV ac line voltage, 20 SMs per arm.
CircuitParams simulation_case_params();

enum class ControlMode { OpenLoop, AcVoltageLoop, CircCurrentLoop, AcVoltagePlusCirc };

std::string_view to_string(ControlMode mode);
std::optional<ControlMode> parse_control_mode(std::string_view text);

struct ControlConfig {
  ControlMode mode = ControlMode::OpenLoop;
  double kpv = 1.0;                 // ac-voltage PR proportional gain
  double krv = 20.0;                // ac-voltage PR resonant gain, 1/s
  double kf = 0.0;                  // additive gain in [k_f + H_v(s)]
  double sample_period = 100e-6;    // T_s, s; delay is 1.5 T_s
  double circ_gain = 20.0;          // R_a, Ohm; negative for virtual resistance compensation
  double resonant_damping = 0.0;    // w_c, rad/s; 0 is the ideal PR

  bool ac_loop() const {
    return mode == ControlMode::AcVoltageLoop || mode == ControlMode::AcVoltagePlusCirc;
  }
  bool circ_loop() const {
    return mode == ControlMode::CircCurrentLoop || mode == ControlMode::AcVoltagePlusCirc;
  }
  bool closed_loop() const { return mode != ControlMode::OpenLoop; }
  /// Ideal PR with nonzero resonant gain has poles at +-j w1.
  bool has_resonant_pole() const { return ac_loop() && krv != 0.0 && resonant_damping == 0.0; }

  void validate() const;

  bool operator==(const ControlConfig&) const = default;
};

struct InsertionIndices {
  double upper;
  double lower;
};

/// n_u, n_l under direct modulation with fundamental and second-harmonic terms.
InsertionIndices insertion_indices(const CircuitParams& params, double t);

/// Fourier coefficients (k = -2..2) of n_u and n_l.
struct InsertionSpectrum {
  hss::HarmonicCoeffs upper;
  hss::HarmonicCoeffs lower;
};
InsertionSpectrum insertion_spectrum(const CircuitParams& params);

/// Fourier blocks A_k of the leg matrix A(t) built from the insertion spectrum.
std::map<int, ComplexMatrix> leg_coefficients(const CircuitParams& params);

struct BaseHss {
  std::map<int, ComplexMatrix> coefficients;  // A_k, |k| <= 2
  hss::ToeplitzOperator toeplitz;              // realized at order h
  hss::HarmonicOperator system;                // toeplitz plus folded load -2 Z_L(jk w1)/L
  hss::HarmonicVector forcing;                 // U: V_dc/(2L) on i_c at k = 0
};

BaseHss build_base_hss(const CircuitParams& params, int order);

class SteadyOperatingPoint {
 public:
  SteadyOperatingPoint(hss::HarmonicVector stack, CircuitParams params);

  const hss::HarmonicVector& stack() const { return stack_; }
  const CircuitParams& params() const { return params_; }
  int order() const { return stack_.order(); }

  Complex circulating_current(int k) const { return stack_(k, kCirculatingCurrent); }
  Complex upper_cap_voltage(int k) const { return stack_(k, kUpperCapVoltage); }
  Complex lower_cap_voltage(int k) const { return stack_(k, kLowerCapVoltage); }
  Complex ac_current(int k) const { return stack_(k, kAcCurrent); }
  /// v_g coefficient: Z_L(j k w1) I_g,k.
  Complex ac_voltage(int k) const;

  hss::HarmonicCoeffs component(State s) const { return stack_.component(s, params_.omega1()); }
  double waveform(State s, double t) const;

 private:
  hss::HarmonicVector stack_;
  CircuitParams params_;
};

/// X_ss = -(A - N)^-1 U with the load folded into A.
SteadyOperatingPoint steady_state(const CircuitParams& params, int order);

/// G_d(s) = exp(-1.5 T_s s).
Complex delay_transfer(const ControlConfig& config, Complex s);
/// k_f + K_pv + K_rv s / (s^2 + 2 w_c s + w1^2).
Complex regulator_transfer(const ControlConfig& config, Complex s, double omega1);
/// G_v(s) = [k_f + H_v(s)] G_d(s).
Complex control_transfer(const ControlConfig& config, Complex s, double omega1);

/// Where the small perturbation source is inserted.
enum class PerturbationPort {
  AcTerminal,  // v_p in series with the load: v_g = v_p + Z_L i_g
  DcBus,       // v_p added to the dc-bus voltage
};

/// Lifted perturbation model: (A_p - N_p) X_p + B_p U_p = 0 at offset w_p.
struct PerturbationModel {
  hss::HarmonicOperator system;                // A_p
  std::optional<hss::HarmonicOperator> input;  // B_p; identity when absent
  hss::HarmonicVector forcing;                 // U_p for unit V_p
  hss::ShiftOperator shift;                    // N_p
};

/// Open-loop model: base blocks, -2 Z_L/L on i_g rows, U_p = [0,0,0,-2V_p/L] at k = 0.
PerturbationModel build_openloop_perturbation(const CircuitParams& params, int order,
                                              double omega_p);

/// Ac-voltage loop linearized about `op`; U_p = [V_p, V_p, V_p, V_p] at k = 0.
PerturbationModel build_acv_perturbation(const CircuitParams& params, const ControlConfig& config,
                                         const SteadyOperatingPoint& op, int order,
                                         double omega_p);

/// Proportional circulating-current loop linearized about `op`.
PerturbationModel build_ccc_perturbation(const CircuitParams& params, const ControlConfig& config,
                                         const SteadyOperatingPoint& op, int order,
                                         double omega_p);

/// Model for any control mode and perturbation port.
PerturbationModel build_perturbation(const CircuitParams& params, const ControlConfig& config,
                                     const SteadyOperatingPoint& op, int order, double omega_p,
                                     PerturbationPort port = PerturbationPort::AcTerminal);

}  // namespace mmchss::mmc
