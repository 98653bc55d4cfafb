#include "mrmesh/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mrmesh/format.hpp"
#include "mrmesh/topology.hpp"

namespace mrmesh::experiment {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MetricDef {
  const char* name;
  bool is_probability;
  bool headline;
  std::function<double(const sim::RunMetrics&)> value;
};

double hs(const sim::RunMetrics& m, sim::Message msg, int rat) {
  return static_cast<double>(m.count(msg, rat));
}

const std::vector<MetricDef>& metric_defs() {
  using sim::Message;
  static const std::vector<MetricDef> defs = {
      {"n_devices", false, false, [](const auto& m) { return static_cast<double>(m.n_devices); }},
      {"n_masters", false, true, [](const auto& m) { return static_cast<double>(m.n_masters); }},
      {"n_chs", false, true, [](const auto& m) { return static_cast<double>(m.n_chs); }},
      {"hello_r1", false, true, [](const auto& m) { return hs(m, Message::kHello, 0); }},
      {"hello_r2", false, true, [](const auto& m) { return hs(m, Message::kHello, 1); }},
      {"poke_r1", false, true, [](const auto& m) { return hs(m, Message::kPoke, 0); }},
      {"poke_r2", false, true, [](const auto& m) { return hs(m, Message::kPoke, 1); }},
      {"tupdate_r1", false, true, [](const auto& m) { return hs(m, Message::kTUpdate, 0); }},
      {"tupdate_r2", false, true, [](const auto& m) { return hs(m, Message::kTUpdate, 1); }},
      {"convergence_time_s", false, true, [](const auto& m) { return m.convergence_time_s; }},
      {"unique_master", true, true, [](const auto& m) { return m.unique_master ? 1.0 : 0.0; }},
      {"cert_v2_dominated", true, false, [](const auto& m) { return m.v2_dominated ? 1.0 : 0.0; }},
      {"cert_ever_coordinator_dominated", true, false,
       [](const auto& m) { return m.ever_coordinator_dominated ? 1.0 : 0.0; }},
      {"cert_final_coordinator_dominated", true, false,
       [](const auto& m) { return m.final_coordinator_dominated ? 1.0 : 0.0; }},
      {"cert_master_covers_ever_ch", true, false,
       [](const auto& m) { return m.master_covers_ever_ch ? 1.0 : 0.0; }},
  };
  return defs;
}

sim::EngineOptions engine_options(const ExperimentConfig& config) {
  sim::EngineOptions opts;
  opts.event_cap = config.event_cap;
  opts.rules = config.rules;
  return opts;
}

/// Runs [first, last) into `out` (indexed by run_id - first); parallel when
/// `parallel` is set. Exceptions other than non-convergence are rethrown.
void run_range(const ExperimentConfig& config, std::uint64_t first, std::uint64_t last,
               std::vector<RunRecord>& out, bool parallel) {
  const auto n = static_cast<std::ptrdiff_t>(last - first);
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(n));
  if (!parallel) {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      out[base + static_cast<std::size_t>(k)] = run_single(config, first + static_cast<std::uint64_t>(k));
    }
    return;
  }
  std::exception_ptr error;
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      out[base + static_cast<std::size_t>(k)] = run_single(config, first + static_cast<std::uint64_t>(k));
    } catch (...) {
#pragma omp critical(mrmesh_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

BatchResult run_batch_impl(const ExperimentConfig& config, bool parallel) {
  config.validate();
  BatchResult result;
  if (config.runs) {
    run_range(config, 0, *config.runs, result.records, parallel);
    result.stats = aggregate(result.records, config);
    return result;
  }
  std::uint64_t done = 0;
  std::uint64_t next = config.min_runs;
  while (true) {
    run_range(config, done, next, result.records, parallel);
    done = next;
    result.stats = aggregate(result.records, config);
    if (result.stats.target_met || done >= config.max_runs) break;
    next = std::min(config.max_runs, done + std::max(config.min_runs, done / 2));
  }
  return result;
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, std::uint64_t run_id) {
  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = derive_seed(config.seed, run_id);
  Rng rng(rec.seed);
  const auto deployment = topology::sample_deployment(rng, config.deployment);
  const channel::RatParams rats[] = {config.short_rat, config.long_rat};
  const auto graphs = topology::realize_links(deployment, rats, config.channel, rng);
  sim::Simulator simulator(deployment, graphs, config.timers, Rng(rng()), engine_options(config));
  try {
    rec.metrics = simulator.run();
  } catch (const sim::NonConvergenceError& e) {
    rec.aborted = true;
    rec.diagnostic = e.what();
    return rec;
  }
  if (config.verify_runs) {
    if (auto err = sim::check_structure(simulator.network(), graphs)) {
      rec.structure_ok = false;
      rec.diagnostic = "structure: " + *err;
    }
    if (!sim::convergence_check(simulator.network(), graphs, config.rules)) {
      rec.quiescent = false;
      if (!rec.diagnostic.empty()) rec.diagnostic += "; ";
      rec.diagnostic += "enabled action remains after convergence";
    }
  }
  return rec;
}

double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0,1)");
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + confidence / 2.0);
}

const MetricStats& AggregateStats::metric(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m;
  }
  throw std::out_of_range("no metric named " + name);
}

AggregateStats aggregate(std::span<const RunRecord> records, const ExperimentConfig& config) {
  AggregateStats stats;
  stats.auto_stop = !config.runs.has_value();
  stats.runs_executed = records.size();
  std::vector<const sim::RunMetrics*> ok;
  for (const auto& r : records) {
    if (r.aborted) {
      ++stats.aborted_runs;
      continue;
    }
    ok.push_back(&r.metrics);
    if (!r.structure_ok) ++stats.structure_violations;
    if (!r.quiescent) ++stats.quiescence_violations;
  }
  stats.converged_runs = ok.size();

  const double z = normal_quantile_two_sided(config.confidence);
  const auto n = static_cast<double>(ok.size());
  bool all_met = !ok.empty();
  for (const auto& def : metric_defs()) {
    MetricStats ms;
    ms.name = def.name;
    ms.is_probability = def.is_probability;
    ms.headline = def.headline;
    ms.run_count = ok.size();
    // Two-pass mean/variance over a fixed order keeps results bit-identical
    // regardless of how the runs were scheduled.
    double sum = 0.0;
    for (const auto* m : ok) sum += def.value(*m);
    ms.mean = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / n;
    if (ok.size() >= 2) {
      double ss = 0.0;
      for (const auto* m : ok) {
        const double d = def.value(*m) - ms.mean;
        ss += d * d;
      }
      ms.sample_variance = ss / (n - 1.0);
      ms.ci_half_width = z * std::sqrt(ms.sample_variance / n);
      ms.relative_margin = ms.ci_half_width == 0.0 ? 0.0
                           : ms.mean == 0.0        ? kInf
                                                   : ms.ci_half_width / std::abs(ms.mean);
    } else {
      ms.sample_variance = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
      ms.ci_half_width = kInf;
      ms.relative_margin = kInf;
    }
    if (ms.relative_margin <= config.target_margin) {
      ms.margin_rule = "relative";
    } else if (ms.is_probability && ms.ci_half_width <= config.abs_margin) {
      ms.margin_rule = "absolute";
    } else {
      ms.margin_rule = "unmet";
    }
    if (ms.headline && ms.margin_rule == "unmet") all_met = false;
    stats.metrics.push_back(std::move(ms));
  }
  stats.target_met = all_met && ok.size() >= config.min_runs;

  for (const auto* m : ok) {
    stats.pmf_masters[m->n_masters] += 1.0;
    stats.pmf_chs[m->n_chs] += 1.0;
  }
  for (auto* pmf : {&stats.pmf_masters, &stats.pmf_chs}) {
    for (auto& [k, v] : *pmf) v /= n;
  }
  return stats;
}

BatchResult run_batch(const ExperimentConfig& config) { return run_batch_impl(config, true); }

BatchResult run_batch_serial(const ExperimentConfig& config) { return run_batch_impl(config, false); }

HandshakeBounds analytic_bounds(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("intensity must be positive");
  // Poisson moments: E[N] = Var[N] = lambda, so E[N^2] = lambda + lambda^2.
  const double mean = lambda;
  const double second_moment = lambda + lambda * lambda;
  return {(second_moment + mean) / 2.0, mean - 1.0, (second_moment - mean) / 2.0};
}

std::string per_run_csv(std::span<const RunRecord> records) {
  using sim::Message;
  std::ostringstream os;
  os << "run_id,seed,n_devices,n_masters,n_chs,hello_r1,hello_r2,poke_r1,poke_r2,tupdate_r1,"
        "tupdate_r2,convergence_time_s,unique_master\n";
  for (const auto& r : records) {
    if (r.aborted) continue;
    const auto& m = r.metrics;
    os << r.run_id << ',' << r.seed << ',' << m.n_devices << ',' << m.n_masters << ','
       << m.n_chs << ',' << m.count(Message::kHello, 0) << ',' << m.count(Message::kHello, 1)
       << ',' << m.count(Message::kPoke, 0) << ',' << m.count(Message::kPoke, 1) << ','
       << m.count(Message::kTUpdate, 0) << ',' << m.count(Message::kTUpdate, 1) << ','
       << fmt6(m.convergence_time_s) << ',' << (m.unique_master ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string aborted_csv(std::span<const RunRecord> records) {
  std::ostringstream os;
  os << "run_id,seed,diagnostic\n";
  for (const auto& r : records) {
    if (!r.aborted) continue;
    std::string diag = r.diagnostic;
    std::replace(diag.begin(), diag.end(), '"', '\'');
    os << r.run_id << ',' << r.seed << ",\"" << diag << "\"\n";
  }
  return os.str();
}

std::string aggregate_csv(const AggregateStats& stats) {
  std::ostringstream os;
  os << "metric,mean,sample_variance,ci_half_width,relative_margin,run_count,margin_rule,"
        "headline\n";
  for (const auto& m : stats.metrics) {
    os << m.name << ',' << fmt6(m.mean) << ',' << fmt6(m.sample_variance) << ','
       << fmt6(m.ci_half_width) << ',' << fmt6(m.relative_margin) << ',' << m.run_count << ','
       << m.margin_rule << ',' << (m.headline ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string pmf_csv(const std::map<std::size_t, double>& pmf) {
  std::ostringstream os;
  os << "n,probability\n";
  for (const auto& [k, v] : pmf) os << k << ',' << fmt6(v) << '\n';
  return os.str();
}

std::string summary_csv(const AggregateStats& stats, const ExperimentConfig& config) {
  std::ostringstream os;
  os << "key,value\n"
     << "seed," << config.seed << '\n'
     << "intensity," << fmt6(config.deployment.intensity) << '\n'
     << "r_a_m," << fmt6(config.deployment.radius_m) << '\n'
     << "runs_mode," << (config.runs ? "fixed" : "auto") << '\n'
     << "run_count," << stats.runs_executed << '\n'
     << "converged_runs," << stats.converged_runs << '\n'
     << "aborted_runs," << stats.aborted_runs << '\n'
     << "structure_violations," << stats.structure_violations << '\n'
     << "quiescence_violations," << stats.quiescence_violations << '\n'
     << "confidence," << fmt6(config.confidence) << '\n'
     << "target_relative_margin," << fmt6(config.target_margin) << '\n'
     << "probability_absolute_margin," << fmt6(config.abs_margin) << '\n'
     << "target_met," << (stats.target_met ? 1 : 0) << '\n'
     << "literal_rules," << (config.rules.literal_rules ? 1 : 0) << '\n'
     << "reparent_orphans," << (config.rules.reparent_orphans ? 1 : 0) << '\n'
     << "n2_view,"
     << (config.rules.n2_view == consensus::N2View::kKnown ? "known" : "coordinator-graph")
     << '\n';
  return os.str();
}

std::string bounds_csv(const HandshakeBounds& b) {
  std::ostringstream os;
  os << "bound,value\n"
     << "upper," << fmt6(b.upper) << '\n'
     << "lower," << fmt6(b.lower) << '\n'
     << "upper_standard," << fmt6(b.upper_standard) << '\n';
  return os.str();
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto path = (fs::path(dir) / name).string();
  if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void emit_outputs(const BatchResult& result, const ExperimentConfig& config,
                  const std::string& dir) {
  write_file(dir, "per_run.csv", per_run_csv(result.records));
  write_file(dir, "aborted_runs.csv", aborted_csv(result.records));
  write_file(dir, "aggregate.csv", aggregate_csv(result.stats));
  write_file(dir, "summary.csv", summary_csv(result.stats, config));
  if (!result.stats.pmf_masters.empty()) {
    write_file(dir, "pmf_n_masters.csv", pmf_csv(result.stats.pmf_masters));
    write_file(dir, "pmf_n_chs.csv", pmf_csv(result.stats.pmf_chs));
  }
}

}  // namespace mrmesh::experiment
