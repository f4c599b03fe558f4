#include <algorithm>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "mmchss_cli/commands.hpp"
#include "mmchss_cli/config.hpp"

using namespace mmchss;
using namespace mmchss::cli;

namespace {

std::filesystem::path sample_config() {
  return std::filesystem::path(MMCHSS_SOURCE_DIR) / "configs" / "sim_case.cfg";
}

ConfigError config_error(std::string_view text) {
  try {
    parse_config_text(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("no ConfigError for: " << text);
  return ConfigError("", "", -1);
}

long line_count(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("missing keys take defaults") {
  const auto c = parse_config_text("vdc_v = 400e3\n");
  RunConfig expected;
  expected.circuit.dc_voltage = 400e3;
  CHECK(c == expected);
  CHECK(parse_config_text("# only a comment\n\n") == RunConfig{});
}

TEST_CASE("bad input names the key and line") {
  auto e = config_error("vdc_v = 320e3\n\nmodulation_index = 1.2\n");
  CHECK(e.key() == "modulation_index");
  CHECK(e.line() == 3);
  CHECK(std::string(e.what()).find("t.cfg:3") != std::string::npos);

  e = config_error("vdc_v = -5\n");
  CHECK(e.key() == "vdc_v");

  e = config_error("arm_inductance = 0.36\n");
  CHECK(e.key() == "arm_inductance");
  CHECK(e.line() == 1);

  e = config_error("kpv = 1\nkpv = 2\n");
  CHECK(e.key() == "kpv");
  CHECK(e.line() == 2);

  e = config_error("sm_per_arm 20\n");
  CHECK(e.line() == 1);

  e = config_error("control_mode = fuzzy\n");
  CHECK(e.key() == "control_mode");

  e = config_error("sm_per_arm = 20.5\n");
  CHECK(e.key() == "sm_per_arm");

  e = config_error("sweep_step_hz = 1x\n");
  CHECK(e.key() == "sweep_step_hz");
}

TEST_CASE("cross-field validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.sim.dt = 3e-5;  // does not divide T1
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.grid.stop_hz = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("shipped configuration") {
  const auto c = parse_config(sample_config());
  CHECK(c.circuit.dc_voltage == 320e3);
  CHECK(c.circuit.arm_inductance == 0.36);
  CHECK(c.circuit.sm_capacitance == 140e-6);
  CHECK(c.circuit.sm_per_arm == 20);
  CHECK(c.circuit.modulation_index == 0.847);
  CHECK(c.circuit.load_resistance == 550.0);
  CHECK(c.control.mode == mmc::ControlMode::OpenLoop);
  CHECK(c.control.krv == 20.0);
  CHECK(c.control.sample_period == 100e-6);
  CHECK(c.grid.start_hz == 5.0);
  CHECK(c.grid.stop_hz == 500.0);
  CHECK(c.measure_freqs_hz == std::vector<double>{10, 35, 80, 120, 200});
  CHECK_THROWS_AS(parse_config("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("dump and reparse is lossless") {
  auto c = parse_config(sample_config());
  c.control.mode = mmc::ControlMode::AcVoltagePlusCirc;
  c.circuit.modulation_phase = 0.1 / 3.0;
  c.sweep_csv = "out/sweep.csv";
  c.measure_freqs_hz = {7.25, 1.0 / 3.0};
  std::ostringstream out;
  write_config(c, out);
  CHECK(parse_config_text(out.str()) == c);
  for (auto key : config_keys()) CHECK(out.str().find(std::string(key) + " = ") != std::string::npos);
}

TEST_CASE("frequency lists") {
  CHECK(parse_frequency_list("10,35, 80 ,1e2") == std::vector<double>{10, 35, 80, 100});
  CHECK_THROWS(parse_frequency_list(""));
  CHECK_THROWS(parse_frequency_list("10,,35"));
  CHECK_THROWS(parse_frequency_list("10,abc"));
  CHECK_THROWS(parse_frequency_list("-5"));
}

TEST_CASE("phase mapping") {
  CHECK(phase_deg({-1.0, 0.0}) == 180.0);
  CHECK(phase_deg({-1.0, -0.0}) == 180.0);
  CHECK(phase_deg({0.0, -1.0}) == doctest::Approx(-90.0));
  std::ostringstream out;
  const impedance::ImpedancePoint p{10.0, {-1.0, -0.0}, mmc::ControlMode::OpenLoop, 4};
  write_impedance_csv(std::span(&p, 1), out);
  CHECK(out.str() == "freq_hz,z_re_ohm,z_im_ohm,z_mag_db,z_phase_deg\n10,-1,-0,0,180\n");
}

TEST_CASE("sweep output") {
  const auto c = parse_config(sample_config());
  std::ostringstream a, b;
  CHECK(cmd_sweep(c, a) == kExitOk);
  CHECK(line_count(a.str()) == 497);
  cmd_sweep(c, b);
  CHECK(a.str() == b.str());

  auto acv = c;
  acv.control.mode = mmc::ControlMode::AcVoltageLoop;
  std::ostringstream d;
  cmd_sweep(acv, d);
  CHECK(line_count(d.str()) == 492);
  CHECK(d.str().find("\n50,") == std::string::npos);
}

TEST_CASE("steady table") {
  RunConfig c;
  c.circuit.modulation_index = 0.0;
  std::ostringstream out;
  CHECK(cmd_steady(c, out) == kExitOk);
  CHECK(out.str().find("3.2e+05") != std::string::npos);
  CHECK(line_count(out.str()) == 2 + c.harmonic_order + 1);
}

TEST_CASE("compare and exit codes") {
  auto c = parse_config(sample_config());
  c.measure_freqs_hz = {35.0, 50.0};
  c.control.mode = mmc::ControlMode::AcVoltageLoop;
  std::ostringstream out;
  CHECK(cmd_compare(c, out) == kExitOk);
  CHECK(out.str().find("skipped 50 Hz") != std::string::npos);
  CHECK(out.str().find("PASS") != std::string::npos);

  c.tol_mag_pct = 0.0;
  c.tol_phase_deg = 0.0;
  std::ostringstream strict;
  CHECK(cmd_compare(c, strict) == kExitTolerance);

  std::ostringstream err;
  CHECK(run_guarded([] { return kExitOk; }, err) == kExitOk);
  CHECK(run_guarded([]() -> int { throw ConfigError("x", "k", 1); }, err) == kExitConfig);
  CHECK(run_guarded([]() -> int { throw InvalidArgument("x"); }, err) == kExitConfig);
  CHECK(run_guarded([]() -> int { throw NumericalError("x"); }, err) == kExitNumerical);
  CHECK(run_guarded([]() -> int { throw std::runtime_error("x"); }, err) == kExitFailure);
  CHECK(err.str().find("numerical error: x") != std::string::npos);
}
