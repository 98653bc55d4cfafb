#include "mrmesh/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mrmesh/format.hpp"

namespace mrmesh {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kSetupSim: return "setup-sim";
    case Scenario::kLinearAnalysis: return "linear-analysis";
    case Scenario::kChannelCurve: return "channel-curve";
    case Scenario::kBounds: return "bounds";
  }
  return "?";
}

std::vector<double> GridSpec::values() const {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

void GridSpec::validate(const std::string& name) const {
  if (!(start > 0.0)) throw ConfigError(name + "_start must be positive");
  if (!(step > 0.0)) throw ConfigError(name + "_step must be positive");
  if (!(stop >= start)) throw ConfigError(name + "_stop must be >= " + name + "_start");
  if ((stop - start) / step > 1e7) throw ConfigError(name + " grid has too many points");
}

void ExperimentConfig::validate() const {
  auto wrap = [](const char* what, const auto& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  wrap("deployment", [&] { deployment.validate(); });
  wrap("timers", [&] { timers.validate(); });
  wrap("channel", [&] { channel.validate(); });
  wrap("r1", [&] { short_rat.validate(); });
  wrap("r2", [&] { long_rat.validate(); });
  if (!(rho >= 1.0)) throw ConfigError("rho must be >= 1");
  if (runs && *runs < 1) throw ConfigError("runs must be >= 1");
  if (!(target_margin > 0.0)) throw ConfigError("target_margin must be > 0");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0,1)");
  if (!(abs_margin > 0.0)) throw ConfigError("abs_margin must be > 0");
  if (min_runs < 2) throw ConfigError("min_runs must be >= 2");
  if (max_runs < min_runs) throw ConfigError("max_runs must be >= min_runs");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (event_cap < 1) throw ConfigError("event_cap must be >= 1");
  d_min_grid.validate("d_min");
  curve_grid.validate("curve");
}

void ExperimentConfig::sync_derived() { long_rat.time_cost = rho; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid unsigned integer for " + key + ": '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

Scenario parse_scenario(const std::string& v) {
  for (auto s : {Scenario::kSetupSim, Scenario::kLinearAnalysis, Scenario::kChannelCurve,
                 Scenario::kBounds}) {
    if (v == to_string(s)) return s;
  }
  throw ConfigError("invalid scenario: '" + v +
                    "' (expected setup-sim, linear-analysis, channel-curve or bounds)");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

struct KeySpec {
  Setter set;
  std::string (*get)(const ExperimentConfig&);
  const char* doc;
};

Setter dbl(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*field = parse_double(k, v);
  };
}

template <typename F>
Setter dbl_at(F accessor) {
  return [accessor](ExperimentConfig& c, const std::string& k, const std::string& v) {
    accessor(c) = parse_double(k, v);
  };
}

template <typename F>
Setter u64_at(F accessor) {
  return [accessor](ExperimentConfig& c, const std::string& k, const std::string& v) {
    accessor(c) = parse_u64(k, v);
  };
}

template <typename F>
Setter bool_at(F accessor) {
  return [accessor](ExperimentConfig& c, const std::string& k, const std::string& v) {
    accessor(c) = parse_bool(k, v);
  };
}

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      {"scenario",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.scenario = parse_scenario(v); },
        [](const ExperimentConfig& c) { return to_string(c.scenario); },
        "setup-sim | linear-analysis | channel-curve | bounds"}},
      {"intensity",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.deployment.intensity; }),
        [](const ExperimentConfig& c) { return fmt6(c.deployment.intensity); },
        "PPP intensity Lambda (expected device count)"}},
      {"r_a",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.deployment.radius_m; }),
        [](const ExperimentConfig& c) { return fmt6(c.deployment.radius_m); },
        "deployment disk radius r_A in meters"}},
      {"lambda_on",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.timers.lambda_on; }),
        [](const ExperimentConfig& c) { return fmt6(c.timers.lambda_on); }, "power-on rate, 1/s"}},
      {"lambda_ch",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.timers.lambda_ch; }),
        [](const ExperimentConfig& c) { return fmt6(c.timers.lambda_ch); },
        "On -> unassociated CH promotion rate, 1/s"}},
      {"lambda_m",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.timers.lambda_m; }),
        [](const ExperimentConfig& c) { return fmt6(c.timers.lambda_m); },
        "unassociated CH -> Master promotion rate, 1/s"}},
      {"transition_width_m",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.transition_width_m; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.transition_width_m); },
        "LoS/NLoS transition width w, m"}},
      {"shadow_sigma_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.shadow_sigma_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.shadow_sigma_db); },
        "log-normal shadowing standard deviation, dB"}},
      {"location_pct",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.location_pct; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.location_pct); },
        "location percentage p in (0,1) for d_LoS"}},
      {"l_urban_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.l_urban_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.l_urban_db); }, "urban NLoS term, dB"}},
      {"delta_los_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.delta_los_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.delta_los_db); },
        "LoS location correction, dB"}},
      {"delta_nlos_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.channel.delta_nlos_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.channel.delta_nlos_db); },
        "NLoS location correction, dB"}},
      {"literal_outage_sign",
       {bool_at([](ExperimentConfig& c) -> bool& { return c.channel.literal_outage_sign; }),
        [](const ExperimentConfig& c) { return std::string(c.channel.literal_outage_sign ? "true" : "false"); },
        "use Q((L - Lmax)/sigma) for the outage probability"}},
      {"r1_carrier_mhz",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.short_rat.carrier_mhz; }),
        [](const ExperimentConfig& c) { return fmt6(c.short_rat.carrier_mhz); },
        "short-range carrier, MHz"}},
      {"r1_mcl_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.short_rat.max_coupling_loss_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.short_rat.max_coupling_loss_db); },
        "short-range maximum coupling loss, dB"}},
      {"r2_carrier_mhz",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.long_rat.carrier_mhz; }),
        [](const ExperimentConfig& c) { return fmt6(c.long_rat.carrier_mhz); },
        "long-range carrier, MHz"}},
      {"r2_mcl_db",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.long_rat.max_coupling_loss_db; }),
        [](const ExperimentConfig& c) { return fmt6(c.long_rat.max_coupling_loss_db); },
        "long-range maximum coupling loss, dB"}},
      {"rho",
       {dbl(&ExperimentConfig::rho), [](const ExperimentConfig& c) { return fmt6(c.rho); },
        "long-range time-cost multiplier"}},
      {"runs",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "auto") {
            c.runs.reset();
          } else {
            c.runs = parse_u64(k, v);
          }
        },
        [](const ExperimentConfig& c) { return c.runs ? std::to_string(*c.runs) : std::string("auto"); },
        "replication count, or auto for CI-driven stopping"}},
      {"target_margin",
       {dbl(&ExperimentConfig::target_margin),
        [](const ExperimentConfig& c) { return fmt6(c.target_margin); },
        "auto-stop relative CI half-width"}},
      {"confidence",
       {dbl(&ExperimentConfig::confidence), [](const ExperimentConfig& c) { return fmt6(c.confidence); },
        "confidence level of the CI"}},
      {"abs_margin",
       {dbl(&ExperimentConfig::abs_margin), [](const ExperimentConfig& c) { return fmt6(c.abs_margin); },
        "absolute CI half-width accepted for probability metrics"}},
      {"min_runs",
       {u64_at([](ExperimentConfig& c) -> std::uint64_t& { return c.min_runs; }),
        [](const ExperimentConfig& c) { return std::to_string(c.min_runs); },
        "runs before auto-stop may trigger"}},
      {"max_runs",
       {u64_at([](ExperimentConfig& c) -> std::uint64_t& { return c.max_runs; }),
        [](const ExperimentConfig& c) { return std::to_string(c.max_runs); }, "auto-stop run cap"}},
      {"seed",
       {u64_at([](ExperimentConfig& c) -> std::uint64_t& { return c.seed; }),
        [](const ExperimentConfig& c) { return std::to_string(c.seed); }, "master seed"}},
      {"output_dir",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          if (v.empty()) throw ConfigError("output_dir must not be empty");
          c.output_dir = v;
        },
        [](const ExperimentConfig& c) { return c.output_dir; }, "directory for CSV output"}},
      {"threads",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const auto t = parse_u64(k, v);
          if (t > 4096) throw ConfigError("threads out of range");
          c.threads = static_cast<int>(t);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.threads); },
        "worker threads, 0 = OpenMP default"}},
      {"literal_rules",
       {bool_at([](ExperimentConfig& c) -> bool& { return c.rules.literal_rules; }),
        [](const ExperimentConfig& c) { return std::string(c.rules.literal_rules ? "true" : "false"); },
        "apply the rule table exactly as printed"}},
      {"n2_view",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          if (v == "coordinator-graph") {
            c.rules.n2_view = consensus::N2View::kCoordinatorGraph;
          } else if (v == "known") {
            c.rules.n2_view = consensus::N2View::kKnown;
          } else {
            throw ConfigError("invalid n2_view: '" + v + "' (expected coordinator-graph or known)");
          }
        },
        [](const ExperimentConfig& c) {
          return std::string(c.rules.n2_view == consensus::N2View::kKnown ? "known" : "coordinator-graph");
        },
        "N_2[.] in long-range rules: coordinator-graph (neighbors among current UCH/CH/Master) or known (HELLO-learned)"}},
      {"reparent_orphans",
       {bool_at([](ExperimentConfig& c) -> bool& { return c.rules.reparent_orphans; }),
        [](const ExperimentConfig& c) { return std::string(c.rules.reparent_orphans ? "true" : "false"); },
        "members of a demoted head follow its head instead of reverting to On"}},
      {"event_cap",
       {u64_at([](ExperimentConfig& c) -> std::uint64_t& { return c.event_cap; }),
        [](const ExperimentConfig& c) { return std::to_string(c.event_cap); },
        "events per run before a run is declared non-convergent"}},
      {"verify_runs",
       {bool_at([](ExperimentConfig& c) -> bool& { return c.verify_runs; }),
        [](const ExperimentConfig& c) { return std::string(c.verify_runs ? "true" : "false"); },
        "check structure and quiescence after each run"}},
      {"d_min_start",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.d_min_grid.start; }),
        [](const ExperimentConfig& c) { return fmt6(c.d_min_grid.start); }, "linear sweep start, m"}},
      {"d_min_stop",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.d_min_grid.stop; }),
        [](const ExperimentConfig& c) { return fmt6(c.d_min_grid.stop); }, "linear sweep stop, m"}},
      {"d_min_step",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.d_min_grid.step; }),
        [](const ExperimentConfig& c) { return fmt6(c.d_min_grid.step); }, "linear sweep step, m"}},
      {"curve_start",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.curve_grid.start; }),
        [](const ExperimentConfig& c) { return fmt6(c.curve_grid.start); }, "channel curve start, m"}},
      {"curve_stop",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.curve_grid.stop; }),
        [](const ExperimentConfig& c) { return fmt6(c.curve_grid.stop); }, "channel curve stop, m"}},
      {"curve_step",
       {dbl_at([](ExperimentConfig& c) -> double& { return c.curve_grid.step; }),
        [](const ExperimentConfig& c) { return fmt6(c.curve_grid.step); }, "channel curve step, m"}},
  };
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto& table = key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second.set(config, key, value);
  config.sync_derived();
}

void apply_config(ExperimentConfig& config, std::istream& in, const std::string& source) {
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig config;
  apply_config(config, in, path);
  return config;
}

std::string default_config_text() {
  const ExperimentConfig defaults;
  std::ostringstream os;
  for (const auto& [key, spec] : key_table()) {
    os << "# " << spec.doc << '\n' << key << " = " << spec.get(defaults) << '\n';
  }
  return os.str();
}

}  // namespace mrmesh
