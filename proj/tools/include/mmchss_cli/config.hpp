#pragma once

// Flat `key = value` run configuration. One key per line, `#` starts a
// comment, SI units are carried in the key suffix.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mmchss/td_sim.hpp"

namespace mmchss::cli {

struct RunConfig {
  mmc::CircuitParams circuit = mmc::simulation_case_params();
  mmc::ControlConfig control;
  sim::SimConfig sim;
  impedance::FrequencyGrid grid;
  double guard_hz = 2.0;
  int harmonic_order = 4;
  std::vector<double> measure_freqs_hz{10.0, 35.0, 80.0, 120.0, 200.0};
  double tol_mag_pct = 5.0;
  double tol_phase_deg = 5.0;
  std::string sweep_csv;
  std::string measure_csv;
  std::string trajectory_csv;

  bool operator==(const RunConfig&) const = default;
};

/// Carries the offending key and its line (0 when the problem is not tied
/// to a single line, e.g. a cross-field constraint).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, std::string_view source = "<config>");

/// Cross-field checks (module validators plus simulation step constraints).
void validate(const RunConfig& config);

/// Every key with its effective value; parse_config_text reads it back equal.
void write_config(const RunConfig& config, std::ostream& out);

std::vector<std::string_view> config_keys();

/// "10,35,80" -> {10, 35, 80}; throws std::invalid_argument on bad input.
std::vector<double> parse_frequency_list(std::string_view text);

}  // namespace mmchss::cli
