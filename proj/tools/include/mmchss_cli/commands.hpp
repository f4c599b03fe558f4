#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mmchss_cli/config.hpp"

namespace mmchss::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitTolerance = 4,
};

/// freq_hz,z_re_ohm,z_im_ohm,z_mag_db,z_phase_deg; 9 significant digits.
void write_impedance_csv(std::span<const impedance::ImpedancePoint> points, std::ostream& out);

/// Phase of z in degrees, mapped to (-180, 180].
double phase_deg(Complex z);

struct CompareRow {
  double freq_hz;
  Complex analytic;
  Complex measured;
  double mag_dev_pct;
  double phase_dev_deg;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<double> skipped_hz;  // inside the PR guard band
  double max_mag_dev_pct = 0.0;
  double max_phase_dev_deg = 0.0;

  bool within(double tol_mag_pct, double tol_phase_deg) const {
    return max_mag_dev_pct <= tol_mag_pct && max_phase_dev_deg <= tol_phase_deg;
  }
};

/// td_sim measurements at each frequency, run in parallel.
std::vector<impedance::ImpedancePoint> measure_points(const RunConfig& config,
                                                      std::span<const double> freqs_hz);

CompareReport compare(const RunConfig& config);

int cmd_steady(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);
int cmd_measure(const RunConfig& config, std::ostream& out);
int cmd_compare(const RunConfig& config, std::ostream& out);
int cmd_simulate(const RunConfig& config, std::ostream& out);

/// Runs a command, reporting exceptions on `err` and mapping them to exit codes.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace mmchss::cli
