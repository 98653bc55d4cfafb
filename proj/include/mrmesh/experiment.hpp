// Monte-Carlo batch execution of the setup simulation with CI-driven
// stopping, analytic handshake bounds and CSV emission.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrmesh/config.hpp"
#include "mrmesh/simengine.hpp"

namespace mrmesh::experiment {

/// Outcome of one replication.
struct RunRecord {
  std::uint64_t run_id = 0;
  std::uint64_t seed = 0;
  bool aborted = false;            ///< hit the event cap
  std::string diagnostic;          ///< abort or verification message
  sim::RunMetrics metrics;         ///< valid when !aborted
  bool structure_ok = true;        ///< link-backed roles after convergence
  bool quiescent = true;           ///< no enabled action after convergence
};

/// One replication: deployment, link realization and simulation, all drawn
/// from the stream derive_seed(config.seed, run_id).
RunRecord run_single(const ExperimentConfig& config, std::uint64_t run_id);

/// Summary of one metric over the converged runs.
struct MetricStats {
  std::string name;
  bool is_probability = false;
  bool headline = true;          ///< participates in the auto-stop decision
  double mean = 0.0;
  double sample_variance = 0.0;
  double ci_half_width = 0.0;    ///< +inf when fewer than two runs
  double relative_margin = 0.0;  ///< half-width / |mean|; +inf when undefined
  std::uint64_t run_count = 0;
  /// "relative" or "absolute" when the stop target is met, "unmet" otherwise.
  std::string margin_rule;
};

struct AggregateStats {
  std::uint64_t runs_executed = 0;  ///< including aborted runs
  std::uint64_t converged_runs = 0;
  std::uint64_t aborted_runs = 0;
  std::uint64_t structure_violations = 0;
  std::uint64_t quiescence_violations = 0;
  bool auto_stop = false;
  bool target_met = false;
  std::vector<MetricStats> metrics;
  std::map<std::size_t, double> pmf_masters;
  std::map<std::size_t, double> pmf_chs;

  const MetricStats& metric(const std::string& name) const;
};

struct BatchResult {
  std::vector<RunRecord> records;  ///< ordered by run_id
  AggregateStats stats;
};

/// Two-sided standard-normal quantile for a confidence level in (0,1).
double normal_quantile_two_sided(double confidence);

/// Aggregates records in run_id order.
AggregateStats aggregate(std::span<const RunRecord> records, const ExperimentConfig& config);

/// Parallel batch (OpenMP over replications). Fixed mode runs exactly
/// config.runs; auto mode adds deterministic blocks until every metric meets
/// its margin target or max_runs is reached. Results depend only on the
/// master seed and the run count, never on the thread count.
BatchResult run_batch(const ExperimentConfig& config);

/// Single-threaded reference of run_batch with identical results.
BatchResult run_batch_serial(const ExperimentConfig& config);

struct HandshakeBounds {
  double upper = 0.0;           ///< E[N(N+1)/2] as used for the reference bound
  double lower = 0.0;           ///< E[N-1]
  double upper_standard = 0.0;  ///< E[N(N-1)/2], the usual complete-graph count
};

/// Expected long-range handshake bounds for N ~ Poisson(lambda).
HandshakeBounds analytic_bounds(double lambda_intensity);

std::string per_run_csv(std::span<const RunRecord> records);
std::string aborted_csv(std::span<const RunRecord> records);
std::string aggregate_csv(const AggregateStats& stats);
std::string pmf_csv(const std::map<std::size_t, double>& pmf);
std::string summary_csv(const AggregateStats& stats, const ExperimentConfig& config);
std::string bounds_csv(const HandshakeBounds& bounds);

/// Writes `content` to `dir/name`, creating `dir`; throws std::runtime_error
/// naming the path on failure.
void write_file(const std::string& dir, const std::string& name, const std::string& content);

/// Writes per_run.csv, aborted_runs.csv, aggregate.csv, summary.csv and the
/// pmf files (pmf_n_masters.csv, pmf_n_chs.csv, only when non-empty).
void emit_outputs(const BatchResult& result, const ExperimentConfig& config,
                  const std::string& dir);

}  // namespace mrmesh::experiment
