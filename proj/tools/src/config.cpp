#include "mmchss_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace mmchss::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// set() returns an empty string on success, else the violated rule.
struct Key {
  std::string_view name;
  std::function<std::string(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

using RealRef = double& (*)(RunConfig&);
using IntRef = int& (*)(RunConfig&);
using TextRef = std::string& (*)(RunConfig&);

enum class Rule { Any, Positive, NonNegative, UnitInterval };

bool satisfies(double v, Rule r) {
  switch (r) {
    case Rule::Any: return true;
    case Rule::Positive: return v > 0.0;
    case Rule::NonNegative: return v >= 0.0;
    case Rule::UnitInterval: return v >= 0.0 && v < 1.0;
  }
  return false;
}

const char* describe(Rule r) {
  switch (r) {
    case Rule::Any: return "a finite number";
    case Rule::Positive: return "a positive number";
    case Rule::NonNegative: return "a non-negative number";
    case Rule::UnitInterval: return "a number in [0, 1)";
  }
  return "";
}

Key real(std::string_view name, RealRef ref, Rule rule) {
  return {name,
          [ref, rule](RunConfig& c, std::string_view v) -> std::string {
            double x = 0.0;
            if (!parse_double(v, x) || !satisfies(x, rule)) {
              return std::string("expected ") + describe(rule);
            }
            ref(c) = x;
            return {};
          },
          [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); }};
}

Key integer(std::string_view name, IntRef ref, int lo, int hi) {
  return {name,
          [ref, lo, hi](RunConfig& c, std::string_view v) -> std::string {
            int x = 0;
            if (!parse_int(v, x) || x < lo || x > hi) {
              std::ostringstream msg;
              msg << "expected an integer in [" << lo << ", " << hi << "]";
              return msg.str();
            }
            ref(c) = x;
            return {};
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Key text(std::string_view name, TextRef ref) {
  return {name,
          [ref](RunConfig& c, std::string_view v) -> std::string {
            ref(c) = std::string(v);
            return {};
          },
          [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      real("vdc_v", [](RunConfig& c) -> double& { return c.circuit.dc_voltage; }, Rule::Positive),
      real("arm_inductance_h", [](RunConfig& c) -> double& { return c.circuit.arm_inductance; },
           Rule::Positive),
      real("arm_resistance_ohm", [](RunConfig& c) -> double& { return c.circuit.arm_resistance; },
           Rule::NonNegative),
      real("sm_capacitance_f", [](RunConfig& c) -> double& { return c.circuit.sm_capacitance; },
           Rule::Positive),
      integer("sm_per_arm", [](RunConfig& c) -> int& { return c.circuit.sm_per_arm; }, 1, 100000),
      real("fundamental_hz", [](RunConfig& c) -> double& { return c.circuit.fundamental_hz; },
           Rule::Positive),
      real("modulation_index", [](RunConfig& c) -> double& { return c.circuit.modulation_index; },
           Rule::UnitInterval),
      real("modulation_phase_rad",
           [](RunConfig& c) -> double& { return c.circuit.modulation_phase; }, Rule::Any),
      real("m2_index", [](RunConfig& c) -> double& { return c.circuit.m2_index; },
           Rule::UnitInterval),
      real("m2_phase_rad", [](RunConfig& c) -> double& { return c.circuit.m2_phase; }, Rule::Any),
      real("load_resistance_ohm",
           [](RunConfig& c) -> double& { return c.circuit.load_resistance; }, Rule::NonNegative),
      real("load_inductance_h", [](RunConfig& c) -> double& { return c.circuit.load_inductance; },
           Rule::NonNegative),
      {"control_mode",
       [](RunConfig& c, std::string_view v) -> std::string {
         const auto mode = mmc::parse_control_mode(v);
         if (!mode) return "expected one of open, acv, ccc, acv+ccc";
         c.control.mode = *mode;
         return {};
       },
       [](const RunConfig& c) { return std::string(mmc::to_string(c.control.mode)); }},
      real("kpv", [](RunConfig& c) -> double& { return c.control.kpv; }, Rule::Any),
      real("krv", [](RunConfig& c) -> double& { return c.control.krv; }, Rule::Any),
      real("kf", [](RunConfig& c) -> double& { return c.control.kf; }, Rule::Any),
      real("sample_period_s", [](RunConfig& c) -> double& { return c.control.sample_period; },
           Rule::Positive),
      real("circ_gain_ohm", [](RunConfig& c) -> double& { return c.control.circ_gain; },
           Rule::Any),
      real("pr_damping_rad_s", [](RunConfig& c) -> double& { return c.control.resonant_damping; },
           Rule::NonNegative),
      real("sim_dt_s", [](RunConfig& c) -> double& { return c.sim.dt; }, Rule::NonNegative),
      integer("settle_cycles", [](RunConfig& c) -> int& { return c.sim.settle_cycles; }, 0,
              1000000),
      integer("measure_cycles", [](RunConfig& c) -> int& { return c.sim.measure_cycles; }, 1,
              10000),
      real("perturb_amplitude_v", [](RunConfig& c) -> double& { return c.sim.amplitude; },
           Rule::NonNegative),
      real("perturb_freq_hz", [](RunConfig& c) -> double& { return c.sim.freq_hz; },
           Rule::Positive),
      real("sweep_start_hz", [](RunConfig& c) -> double& { return c.grid.start_hz; },
           Rule::Positive),
      real("sweep_stop_hz", [](RunConfig& c) -> double& { return c.grid.stop_hz; },
           Rule::Positive),
      real("sweep_step_hz", [](RunConfig& c) -> double& { return c.grid.step_hz; },
           Rule::Positive),
      real("guard_hz", [](RunConfig& c) -> double& { return c.guard_hz; }, Rule::NonNegative),
      integer("harmonic_order", [](RunConfig& c) -> int& { return c.harmonic_order; }, 1, 16),
      {"measure_freqs_hz",
       [](RunConfig& c, std::string_view v) -> std::string {
         try {
           c.measure_freqs_hz = parse_frequency_list(v);
         } catch (const std::invalid_argument& e) {
           return e.what();
         }
         return {};
       },
       [](const RunConfig& c) {
         std::string s;
         for (double f : c.measure_freqs_hz) {
           if (!s.empty()) s += ',';
           s += format_double(f);
         }
         return s;
       }},
      real("tol_mag_pct", [](RunConfig& c) -> double& { return c.tol_mag_pct; }, Rule::Positive),
      real("tol_phase_deg", [](RunConfig& c) -> double& { return c.tol_phase_deg; },
           Rule::Positive),
      text("sweep_csv", [](RunConfig& c) -> std::string& { return c.sweep_csv; }),
      text("measure_csv", [](RunConfig& c) -> std::string& { return c.measure_csv; }),
      text("trajectory_csv", [](RunConfig& c) -> std::string& { return c.trajectory_csv; }),
  };
  return table;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string located(std::string_view source, int line, std::string_view msg) {
  std::ostringstream out;
  out << source << ':' << line << ": " << msg;
  return out.str();
}

}  // namespace

std::vector<double> parse_frequency_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    double f = 0.0;
    if (!parse_double(item, f) || !(f > 0.0)) {
      throw std::invalid_argument("expected a comma-separated list of positive frequencies");
    }
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> names;
  for (const auto& k : keys()) names.push_back(k.name);
  return names;
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
  RunConfig config;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == line.npos) {
      throw ConfigError(located(source, line_no, "expected `key = value`"), "", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const Key* k = find_key(key);
    if (!k) throw ConfigError(located(source, line_no, "unknown key `" + key + "`"), key, line_no);
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError(located(source, line_no,
                                "duplicate key `" + key + "` (first set on line " +
                                    std::to_string(it->second) + ")"),
                        key, line_no);
    }
    seen.emplace(key, line_no);
    if (const auto err = k->set(config, value); !err.empty()) {
      throw ConfigError(located(source, line_no, "`" + key + "`: " + err), key, line_no);
    }
  }
  validate(config);
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string(), "", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void validate(const RunConfig& c) {
  auto wrap = [](auto&& check) {
    try {
      check();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("invalid configuration: ") + e.what(), "", 0);
    }
  };
  wrap([&] { c.circuit.validate(); });
  wrap([&] { c.control.validate(); });
  wrap([&] { c.grid.validate(); });
  wrap([&] { c.sim.validate(c.circuit, c.control); });
  if (c.harmonic_order < 1 || c.harmonic_order > 16) {
    throw ConfigError("harmonic_order must be in [1, 16]", "harmonic_order", 0);
  }
}

void write_config(const RunConfig& config, std::ostream& out) {
  for (const auto& k : keys()) out << k.name << " = " << k.get(config) << '\n';
}

}  // namespace mmchss::cli
