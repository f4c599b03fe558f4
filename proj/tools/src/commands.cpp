#include "mmchss_cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "mmchss/parallel.hpp"

namespace mmchss::cli {

namespace {

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  write(file);
  if (!file) throw std::runtime_error("failed writing " + path);
}

bool in_guard(const RunConfig& c, double f) {
  return c.control.has_resonant_pole() &&
         std::abs(f - c.circuit.fundamental_hz) <= c.guard_hz + 1e-9;
}

}  // namespace

double phase_deg(Complex z) {
  double deg = std::arg(z) * 180.0 / kPi;
  if (deg <= -180.0) deg += 360.0;
  return deg;
}

void write_impedance_csv(std::span<const impedance::ImpedancePoint> points, std::ostream& out) {
  out << "freq_hz,z_re_ohm,z_im_ohm,z_mag_db,z_phase_deg\n";
  char line[160];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g\n", p.freq_hz, p.z.real(),
                  p.z.imag(), 20.0 * std::log10(std::abs(p.z)), phase_deg(p.z));
    out << line;
  }
}

std::vector<impedance::ImpedancePoint> measure_points(const RunConfig& config,
                                                      std::span<const double> freqs_hz) {
  std::vector<std::optional<impedance::ImpedancePoint>> slots(freqs_hz.size());
  parallel_for(freqs_hz.size(), worker_count(), [&](std::size_t i) {
    sim::SimConfig s = config.sim;
    s.freq_hz = freqs_hz[i];
    slots[i] = sim::measure_impedance(config.circuit, config.control, s);
  });
  std::vector<impedance::ImpedancePoint> out;
  for (auto& p : slots) out.push_back(*p);
  return out;
}

CompareReport compare(const RunConfig& config) {
  CompareReport report;
  std::vector<double> freqs;
  for (double f : config.measure_freqs_hz) {
    (in_guard(config, f) ? report.skipped_hz : freqs).push_back(f);
  }
  const auto op = mmc::steady_state(config.circuit, config.harmonic_order);
  const auto measured = measure_points(config, freqs);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const Complex za =
        impedance::impedance_at(config.circuit, config.control, op, freqs[i], config.harmonic_order).z;
    const Complex zm = measured[i].z;
    CompareRow row{freqs[i], za, zm, 100.0 * std::abs(std::abs(zm) - std::abs(za)) / std::abs(za),
                   std::abs(std::arg(zm / za)) * 180.0 / kPi};
    report.max_mag_dev_pct = std::max(report.max_mag_dev_pct, row.mag_dev_pct);
    report.max_phase_dev_deg = std::max(report.max_phase_dev_deg, row.phase_dev_deg);
    report.rows.push_back(row);
  }
  return report;
}

int cmd_steady(const RunConfig& config, std::ostream& out) {
  const auto op = mmc::steady_state(config.circuit, config.harmonic_order);
  out << "# steady state, h = " << config.harmonic_order << "; |X_k| and arg X_k (deg)\n";
  out << "k      |I_c| A      arg      |V_cu| V     arg      |V_cl| V     arg      |I_g| A      arg\n";
  char line[256];
  for (int k = 0; k <= op.order(); ++k) {
    std::snprintf(line, sizeof line, "%-3d", k);
    out << line;
    for (int s = 0; s < mmc::kStateDim; ++s) {
      const Complex x = op.stack()(k, s);
      std::snprintf(line, sizeof line, "  %11.5g %8.2f", std::abs(x),
                    std::abs(x) > 0.0 ? phase_deg(x) : 0.0);
      out << line;
    }
    out << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
  impedance::SweepOptions options;
  options.guard_hz = config.guard_hz;
  const auto result = impedance::sweep(config.circuit, config.control, config.grid,
                                       config.harmonic_order, options);
  emit(config.sweep_csv, out, [&](std::ostream& o) { write_impedance_csv(result.points, o); });
  for (const auto& f : result.failures) {
    std::fprintf(stderr, "warning: %g Hz skipped: %s\n", f.freq_hz, f.reason.c_str());
  }
  return kExitOk;
}

int cmd_measure(const RunConfig& config, std::ostream& out) {
  const auto points = measure_points(config, config.measure_freqs_hz);
  emit(config.measure_csv, out, [&](std::ostream& o) { write_impedance_csv(points, o); });
  return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& out) {
  const auto report = compare(config);
  out << "freq_hz   |Z| analytic   |Z| measured   mag_dev_pct   phase_dev_deg\n";
  char line[160];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-9g %12.6g   %12.6g   %11.4f   %13.4f\n", r.freq_hz,
                  std::abs(r.analytic), std::abs(r.measured), r.mag_dev_pct, r.phase_dev_deg);
    out << line;
  }
  for (double f : report.skipped_hz) out << "skipped " << f << " Hz (resonant guard band)\n";
  const bool ok = report.within(config.tol_mag_pct, config.tol_phase_deg);
  out << "max magnitude deviation " << fmt("%.4f", report.max_mag_dev_pct) << " % (tol "
      << config.tol_mag_pct << "), max phase deviation "
      << fmt("%.4f", report.max_phase_dev_deg) << " deg (tol " << config.tol_phase_deg << "): "
      << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitTolerance;
}

int cmd_simulate(const RunConfig& config, std::ostream& out) {
  const auto series = sim::simulate(config.circuit, config.control, config.sim, std::nullopt);
  emit(config.trajectory_csv, out, [&](std::ostream& o) { sim::write_trajectory_csv(series, o); });
  return kExitOk;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace mmchss::cli
