#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mrmesh/experiment.hpp"

using namespace mrmesh;
using namespace mrmesh::experiment;

namespace {

ExperimentConfig small_config(std::uint64_t runs) {
  ExperimentConfig cfg;
  cfg.runs = runs;
  cfg.seed = 99;
  cfg.threads = 3;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Experiment, AnalyticBoundsAtFifty) {
  const auto b = analytic_bounds(50.0);
  EXPECT_EQ(b.upper, 1300.0);
  EXPECT_EQ(b.lower, 49.0);
  EXPECT_EQ(b.upper_standard, 1250.0);
  EXPECT_EQ(bounds_csv(b), "bound,value\nupper,1300\nlower,49\nupper_standard,1250\n");
}

TEST(Experiment, NormalQuantile) {
  EXPECT_NEAR(normal_quantile_two_sided(0.95), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile_two_sided(0.99), 2.5758293035489, 1e-10);
}

TEST(Experiment, RunSingleIsDeterministic) {
  const auto cfg = small_config(1);
  const auto a = run_single(cfg, 7);
  const auto b = run_single(cfg, 7);
  EXPECT_EQ(a.seed, derive_seed(cfg.seed, 7));
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.metrics.handshakes, b.metrics.handshakes);
  EXPECT_TRUE(a.structure_ok);
  EXPECT_TRUE(a.quiescent);
}

TEST(Experiment, SingleRunHasInfiniteInterval) {
  const auto result = run_batch(small_config(1));
  ASSERT_EQ(result.records.size(), 1u);
  const auto& m = result.stats.metric("n_masters");
  EXPECT_EQ(m.run_count, 1u);
  EXPECT_TRUE(std::isinf(m.ci_half_width));
  EXPECT_EQ(m.sample_variance, 0.0);
  EXPECT_FALSE(result.stats.target_met);
}

TEST(Experiment, ParallelMatchesSerialByteForByte) {
  auto cfg = small_config(60);
  const auto par = run_batch(cfg);
  const auto ser = run_batch_serial(cfg);
  EXPECT_EQ(per_run_csv(par.records), per_run_csv(ser.records));
  EXPECT_EQ(aggregate_csv(par.stats), aggregate_csv(ser.stats));
  cfg.threads = 1;
  EXPECT_EQ(per_run_csv(run_batch(cfg).records), per_run_csv(par.records));
}

TEST(Experiment, AggregateIsConsistent) {
  const auto result = run_batch(small_config(80));
  const auto& s = result.stats;
  EXPECT_EQ(s.runs_executed, 80u);
  EXPECT_EQ(s.converged_runs + s.aborted_runs, 80u);
  EXPECT_EQ(s.structure_violations, 0u);
  EXPECT_EQ(s.quiescence_violations, 0u);
  double total = 0.0, prev = -1.0;
  for (const auto& [n, p] : s.pmf_masters) {
    EXPECT_GT(static_cast<double>(n), prev);
    prev = static_cast<double>(n);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto& u = s.metric("unique_master");
  EXPECT_TRUE(u.is_probability);
  const auto one = s.pmf_masters.count(1) ? s.pmf_masters.at(1) : 0.0;
  EXPECT_NEAR(u.mean, one, 1e-12);
  EXPECT_THROW(s.metric("nope"), std::out_of_range);
}

TEST(Experiment, AutoStopMeetsTargetOrCap) {
  auto cfg = small_config(1);
  cfg.runs.reset();
  cfg.min_runs = 50;
  cfg.max_runs = 400;
  cfg.target_margin = 0.05;
  cfg.abs_margin = 0.05;
  const auto result = run_batch(cfg);
  EXPECT_TRUE(result.stats.auto_stop);
  EXPECT_GE(result.records.size(), 50u);
  EXPECT_LE(result.records.size(), 400u);
  if (result.stats.target_met) {
    for (const auto& m : result.stats.metrics) {
      if (m.headline) EXPECT_NE(m.margin_rule, "unmet") << m.name;
    }
  } else {
    EXPECT_EQ(result.records.size(), 400u);
  }
  // Auto mode is as deterministic as fixed mode.
  EXPECT_EQ(per_run_csv(run_batch(cfg).records), per_run_csv(result.records));
}

TEST(Experiment, CsvFormats) {
  const auto result = run_batch(small_config(3));
  const auto csv = per_run_csv(result.records);
  EXPECT_EQ(csv.rfind("run_id,seed,n_devices,n_masters,n_chs,hello_r1,hello_r2,poke_r1,poke_r2,"
                      "tupdate_r1,tupdate_r2,convergence_time_s,unique_master\n0,",
                      0),
            0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(aborted_csv(result.records), "run_id,seed,diagnostic\n");
  EXPECT_EQ(aggregate_csv(result.stats)
                .rfind("metric,mean,sample_variance,ci_half_width,relative_margin,run_count,"
                       "margin_rule,headline\n",
                       0),
            0u);
  EXPECT_EQ(pmf_csv({{1, 0.25}, {2, 0.75}}), "n,probability\n1,0.25\n2,0.75\n");
}

TEST(Experiment, EventCapAbortsAreRecorded) {
  auto cfg = small_config(4);
  cfg.event_cap = 3;
  const auto result = run_batch(cfg);
  EXPECT_EQ(result.stats.aborted_runs, 4u);
  for (const auto& r : result.records) {
    EXPECT_TRUE(r.aborted);
    EXPECT_NE(r.diagnostic.find("no quiescence"), std::string::npos);
  }
  EXPECT_EQ(per_run_csv(result.records).find('\n') + 1, per_run_csv(result.records).size());
}

TEST(Experiment, EmitOutputsWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "mrmesh_test_emit";
  std::filesystem::remove_all(dir);
  const auto cfg = small_config(5);
  const auto result = run_batch(cfg);
  emit_outputs(result, cfg, dir.string());
  for (const char* name : {"per_run.csv", "aborted_runs.csv", "aggregate.csv", "summary.csv",
                           "pmf_n_masters.csv", "pmf_n_chs.csv"}) {
    const auto text = slurp(dir / name);
    ASSERT_FALSE(text.empty()) << name;
    EXPECT_EQ(text.back(), '\n') << name;
  }
  EXPECT_EQ(slurp(dir / "per_run.csv"), per_run_csv(result.records));
  std::filesystem::remove_all(dir);
}
