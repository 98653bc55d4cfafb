// Experiment configuration: a flat text file of `key = value` lines whose
// defaults reproduce the reference settings (Lambda = 50, r_A = 500 m,
// 2 lambda_on = lambda_CH = lambda_M = 0.2/s, rho = 5, sigma = 7 dB, ...).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrmesh/channel.hpp"
#include "mrmesh/consensus.hpp"
#include "mrmesh/simengine.hpp"
#include "mrmesh/topology.hpp"

namespace mrmesh {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { kSetupSim, kLinearAnalysis, kChannelCurve, kBounds };

std::string to_string(Scenario s);

/// Evenly spaced grid [start, stop] with the given step (stop included when
/// it lands on the grid within rounding).
struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
  void validate(const std::string& name) const;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::kSetupSim;

  topology::DeploymentConfig deployment;
  sim::TimerConfig timers;
  channel::ChannelParams channel;
  channel::RatParams short_rat = channel::default_short_range();
  channel::RatParams long_rat = channel::default_long_range();
  double rho = 5.0;

  /// Fixed replication count; empty means CI-driven auto-stop.
  std::optional<std::uint64_t> runs = 10'000;
  double target_margin = 0.005;  ///< relative CI half-width for auto-stop
  double confidence = 0.95;
  /// Absolute CI half-width accepted for probability metrics.
  double abs_margin = 0.002;
  std::uint64_t min_runs = 100;
  std::uint64_t max_runs = 1'000'000;

  std::uint64_t seed = 1;
  std::string output_dir = "out";
  /// Worker threads for batch execution; 0 leaves the OpenMP default.
  int threads = 0;

  consensus::RuleOptions rules;
  std::uint64_t event_cap = 1'000'000;
  /// Check link-backed structure and quiescence after every run.
  bool verify_runs = true;

  GridSpec d_min_grid{50.0, 500.0, 10.0};
  GridSpec curve_grid{1.0, 5000.0, 1.0};

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// The long-range RAT's time cost tracks rho.
  void sync_derived();
};

/// Applies `key = value` lines to `config`. Blank lines and `#` comments are
/// ignored; unknown keys, malformed values and repeated keys are errors.
/// `source` names the input in error messages.
void apply_config(ExperimentConfig& config, std::istream& in, const std::string& source);

/// Defaults overridden by the file at `path`.
ExperimentConfig load_config(const std::string& path);

/// Applies one setting; shared by the file parser and the command line.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Documented keys with their default values, as a commented config file.
std::string default_config_text();

}  // namespace mrmesh
