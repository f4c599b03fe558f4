#include <iostream>

#include "CLI11.hpp"
#include "mmchss_cli/commands.hpp"

using namespace mmchss::cli;

int main(int argc, char** argv) {
  CLI::App app{"Harmonic state-space impedance model of an MMC phase leg"};
  app.require_subcommand(1);
  // `--h` is the truncation order, so help is long-form only
  app.set_help_flag("--help", "print this help message and exit");

  std::string config_path;
  std::string out_path;
  std::string freqs;
  int order = 0;
  double tol_mag = -1.0;
  double tol_phase = -1.0;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config,-c", config_path, "key = value configuration file")
        ->check(CLI::ExistingFile);
  };
  auto add_order = [&](CLI::App* cmd) {
    cmd->add_option("--h", order, "harmonic truncation order")->check(CLI::Range(1, 16));
  };

  auto* steady = app.add_subcommand("steady", "print the periodic operating point");
  add_config(steady);
  add_order(steady);

  auto* sweep = app.add_subcommand("sweep", "analytic impedance sweep to CSV");
  add_config(sweep);
  add_order(sweep);
  sweep->add_option("--out,-o", out_path, "CSV path (default: sweep_csv or stdout)");

  auto* measure = app.add_subcommand("measure", "time-domain impedance measurement to CSV");
  add_config(measure);
  measure->add_option("--freqs", freqs, "comma-separated perturbation frequencies in Hz");
  measure->add_option("--out,-o", out_path, "CSV path (default: measure_csv or stdout)");

  auto* cmp = app.add_subcommand("compare", "analytic vs time-domain impedance");
  add_config(cmp);
  add_order(cmp);
  cmp->add_option("--freqs", freqs, "comma-separated perturbation frequencies in Hz");
  cmp->add_option("--tol-mag", tol_mag, "magnitude tolerance in percent");
  cmp->add_option("--tol-phase", tol_phase, "phase tolerance in degrees");

  auto* simulate = app.add_subcommand("simulate", "dump the unperturbed trajectory as CSV");
  add_config(simulate);
  simulate->add_option("--out,-o", out_path, "CSV path (default: trajectory_csv or stdout)");

  auto* dump = app.add_subcommand("dump-config", "print the effective configuration");
  add_config(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  return run_guarded(
      [&]() -> int {
        RunConfig config = config_path.empty() ? RunConfig{} : parse_config(config_path);
        if (order > 0) config.harmonic_order = order;
        if (!freqs.empty()) config.measure_freqs_hz = parse_frequency_list(freqs);
        if (tol_mag >= 0.0) config.tol_mag_pct = tol_mag;
        if (tol_phase >= 0.0) config.tol_phase_deg = tol_phase;
        if (!out_path.empty()) {
          config.sweep_csv = config.measure_csv = config.trajectory_csv = out_path;
        }
        validate(config);

        auto* cmd = app.get_subcommands().front();
        if (cmd == steady) return cmd_steady(config, std::cout);
        if (cmd == sweep) return cmd_sweep(config, std::cout);
        if (cmd == measure) return cmd_measure(config, std::cout);
        if (cmd == cmp) return cmd_compare(config, std::cout);
        if (cmd == simulate) return cmd_simulate(config, std::cout);
        write_config(config, std::cout);
        return kExitOk;
      },
      std::cerr);
}
