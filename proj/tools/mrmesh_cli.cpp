// mrmesh: command-line front-end for the setup simulation, the linear-network
// analysis, channel curves and analytic handshake bounds.
//
// Exit codes: 0 success, 2 configuration error, 3 non-convergent run,
// 1 any other failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "mrmesh/channel.hpp"
#include "mrmesh/config.hpp"
#include "mrmesh/experiment.hpp"
#include "mrmesh/format.hpp"
#include "mrmesh/linear_analysis.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergent = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string runs;
  std::string out;
  std::optional<double> r_a;
  bool literal_rules = false;
  bool reparent_orphans = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value configuration file");
  cmd->add_option("--seed", f.seed, "master seed (u64)");
  cmd->add_option("--runs", f.runs, "replication count N, or 'auto' for CI-driven stopping");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--r-a", f.r_a, "deployment radius r_A in meters");
  cmd->add_flag("--literal-rules", f.literal_rules, "apply the rule table exactly as printed");
  cmd->add_flag("--reparent-orphans", f.reparent_orphans,
                "members of a demoted head follow its head instead of reverting to On");
}

/// Config file first, then command-line overrides, then validation.
mrmesh::ExperimentConfig build_config(const CommonFlags& f, mrmesh::Scenario scenario) {
  mrmesh::ExperimentConfig cfg =
      f.config_path.empty() ? mrmesh::ExperimentConfig{} : mrmesh::load_config(f.config_path);
  cfg.scenario = scenario;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.runs.empty()) mrmesh::set_config_value(cfg, "runs", f.runs);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.r_a) cfg.deployment.radius_m = *f.r_a;
  if (f.literal_rules) cfg.rules.literal_rules = true;
  if (f.reparent_orphans) cfg.rules.reparent_orphans = true;
  cfg.sync_derived();
  cfg.validate();
  return cfg;
}

int cmd_simulate(const mrmesh::ExperimentConfig& cfg) {
  using namespace mrmesh::experiment;
  const auto result = run_batch(cfg);
  emit_outputs(result, cfg, cfg.output_dir);
  const auto& s = result.stats;
  std::printf("runs=%llu converged=%llu aborted=%llu structure_violations=%llu\n",
              static_cast<unsigned long long>(s.runs_executed),
              static_cast<unsigned long long>(s.converged_runs),
              static_cast<unsigned long long>(s.aborted_runs),
              static_cast<unsigned long long>(s.structure_violations));
  if (s.converged_runs > 0) {
    for (const char* name : {"unique_master", "cert_v2_dominated", "n_masters",
                             "hello_r2", "poke_r2", "tupdate_r2", "poke_r1"}) {
      const auto& m = s.metric(name);
      std::printf("%s mean=%s ci=%s margin=%s\n", name, mrmesh::fmt6(m.mean).c_str(),
                  mrmesh::fmt6(m.ci_half_width).c_str(), m.margin_rule.c_str());
    }
  }
  std::printf("output written to %s\n", cfg.output_dir.c_str());
  if (s.aborted_runs > 0) {
    for (const auto& r : result.records) {
      if (r.aborted) {
        std::fprintf(stderr, "non-convergent run %llu (seed %llu): %s\n",
                     static_cast<unsigned long long>(r.run_id),
                     static_cast<unsigned long long>(r.seed), r.diagnostic.c_str());
      }
    }
    return kExitNonConvergent;
  }
  return kExitOk;
}

int cmd_linear(const mrmesh::ExperimentConfig& cfg) {
  const auto grid = cfg.d_min_grid.values();
  const auto rows = mrmesh::linear::figure4_sweep(grid, cfg.rho, cfg.short_rat, cfg.long_rat,
                                                  cfg.channel);
  mrmesh::experiment::write_file(cfg.output_dir, "linear.csv", mrmesh::linear::figure4_to_csv(rows));
  std::printf("%zu grid points written to %s/linear.csv\n", rows.size(), cfg.output_dir.c_str());
  return kExitOk;
}

int cmd_channel_curve(const mrmesh::ExperimentConfig& cfg) {
  const auto grid = cfg.curve_grid.values();
  for (const auto& rat : {cfg.short_rat, cfg.long_rat}) {
    const auto curve = mrmesh::channel::channel_curve(rat, grid, cfg.channel);
    const auto name = "channel_curve_r" + std::to_string(rat.index() + 1) + ".csv";
    mrmesh::experiment::write_file(cfg.output_dir, name, mrmesh::channel::curve_to_csv(curve));
    std::printf("%s written to %s\n", name.c_str(), cfg.output_dir.c_str());
  }
  return kExitOk;
}

int cmd_bounds(const mrmesh::ExperimentConfig& cfg) {
  const auto b = mrmesh::experiment::analytic_bounds(cfg.deployment.intensity);
  const auto csv = mrmesh::experiment::bounds_csv(b);
  mrmesh::experiment::write_file(cfg.output_dir, "bounds.csv", csv);
  std::cout << csv;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-RAT mesh setup simulator and analysis tools"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", "mrmesh 1.0.0");

  CommonFlags flags;
  bool print_defaults = false;
  app.add_flag("--print-default-config", print_defaults,
               "print every configuration key with its default and exit");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo batch of the setup protocol");
  auto* linear = app.add_subcommand("linear", "four-node linear network error/latency sweep");
  auto* curve = app.add_subcommand("channel-curve", "outage probability versus distance");
  auto* bounds = app.add_subcommand("bounds", "analytic long-range handshake bounds");
  for (auto* cmd : {simulate, linear, curve, bounds}) add_common_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (print_defaults) {
    std::cout << mrmesh::default_config_text();
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::fprintf(stderr, "a subcommand is required: simulate, linear, channel-curve or bounds\n");
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(build_config(flags, mrmesh::Scenario::kSetupSim));
    if (linear->parsed()) return cmd_linear(build_config(flags, mrmesh::Scenario::kLinearAnalysis));
    if (curve->parsed()) return cmd_channel_curve(build_config(flags, mrmesh::Scenario::kChannelCurve));
    if (bounds->parsed()) return cmd_bounds(build_config(flags, mrmesh::Scenario::kBounds));
  } catch (const mrmesh::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
