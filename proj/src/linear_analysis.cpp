#include "mrmesh/linear_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mrmesh/format.hpp"

namespace mrmesh::linear {

void ProbWeightedGraph::validate() const {
  if (n_vertices <= 0 || static_cast<std::size_t>(n_vertices) > kMaxVertices) {
    throw std::invalid_argument("vertex count must lie in [1, 16]");
  }
  if (edges.size() > kMaxEdges) {
    throw std::invalid_argument("too many edges for exhaustive enumeration (max 24)");
  }
  auto valid_vertex = [this](int v) { return v >= 0 && v < n_vertices; };
  if (!valid_vertex(source) || !valid_vertex(destination)) {
    throw std::invalid_argument("source/destination out of range");
  }
  for (const auto& e : edges) {
    if (!valid_vertex(e.a) || !valid_vertex(e.b)) throw std::invalid_argument("edge endpoint out of range");
    if (!(e.p >= 0.0 && e.p <= 1.0)) throw std::invalid_argument("edge probability outside [0,1]");
    if (!(e.weight >= 1.0)) throw std::invalid_argument("edge weight must be >= 1");
  }
}

double LatencyDistribution::success_prob() const {
  double s = 0.0;
  for (const auto& [lat, p] : support) s += p;
  return s;
}

namespace {

bool same_latency(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

double LatencyDistribution::mass_at(double s) const {
  for (const auto& [lat, p] : support) {
    if (same_latency(lat, s)) return p;
  }
  return 0.0;
}

double LatencyDistribution::cdf(double s) const {
  double acc = 0.0;
  for (const auto& [lat, p] : support) {
    if (lat <= s || same_latency(lat, s)) acc += p;
  }
  return acc;
}

double LatencyDistribution::conditional_mean() const {
  const double total = success_prob();
  if (total <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& [lat, p] : support) acc += lat * p;
  return acc / total;
}

LatencyDistribution enumerate_latency(const ProbWeightedGraph& graph) {
  graph.validate();
  const std::size_t m = graph.edges.size();
  const auto n = static_cast<std::size_t>(graph.n_vertices);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<std::pair<double, double>> raw;  // (latency, probability) per subset
  double failure = 0.0;
  std::array<double, kMaxVertices> dist{};
  std::array<bool, kMaxVertices> done{};

  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    double prob = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      prob *= (mask >> k & 1u) ? graph.edges[k].p : 1.0 - graph.edges[k].p;
    }
    if (prob == 0.0) continue;

    // Dijkstra over the present edges; the graphs are tiny so O(V^2 + VE).
    dist.fill(kInf);
    done.fill(false);
    dist[static_cast<std::size_t>(graph.source)] = 0.0;
    for (std::size_t it = 0; it < n; ++it) {
      std::size_t u = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (!done[v] && dist[v] < kInf && (u == n || dist[v] < dist[u])) u = v;
      }
      if (u == n) break;
      done[u] = true;
      for (std::size_t k = 0; k < m; ++k) {
        if (!(mask >> k & 1u)) continue;
        const auto& e = graph.edges[k];
        const auto a = static_cast<std::size_t>(e.a);
        const auto b = static_cast<std::size_t>(e.b);
        if (a == u && dist[u] + e.weight < dist[b]) dist[b] = dist[u] + e.weight;
        if (b == u && dist[u] + e.weight < dist[a]) dist[a] = dist[u] + e.weight;
      }
    }
    const double s = dist[static_cast<std::size_t>(graph.destination)];
    if (s == kInf) {
      failure += prob;
    } else {
      raw.emplace_back(s, prob);
    }
  }

  std::sort(raw.begin(), raw.end());
  LatencyDistribution out;
  // A sum of 2^|E| products can round past 1 when a path almost never exists.
  out.failure_prob = std::clamp(failure, 0.0, 1.0);
  for (const auto& [s, p] : raw) {
    if (!out.support.empty() && same_latency(out.support.back().first, s)) {
      out.support.back().second += p;
    } else {
      out.support.emplace_back(s, p);
    }
  }
  return out;
}

double reliability(const ProbWeightedGraph& graph) {
  return 1.0 - enumerate_latency(graph).failure_prob;
}

double closed_form_short_chain(double p12, double p23, double p34) { return p12 * p23 * p34; }

double closed_form_two_hop(const PairProbs& p) {
  return (p.p12 * p.p24 * (1.0 - p.p13 * p.p34) + p.p13 * p.p34) * (1.0 - p.p14);
}

double closed_form_three_hop(const PairProbs& p) {
  return p.p23 * (1.0 - p.p14) *
         (p.p12 * p.p34 * (1.0 - p.p24) * (1.0 - p.p13) +
          p.p13 * p.p24 * (1.0 - p.p12) * (1.0 - p.p34));
}

double multirat_lower_bound(double f1, double f2) {
  if (!(f1 >= 0.0 && f1 <= 1.0 && f2 >= 0.0 && f2 <= 1.0)) {
    throw std::invalid_argument("CDF values must lie in [0,1]");
  }
  return 1.0 - (1.0 - f1) * (1.0 - f2);
}

LatencyDistribution lower_bound_distribution(const LatencyDistribution& a,
                                             const LatencyDistribution& b) {
  std::vector<double> points;
  for (const auto& [s, p] : a.support) points.push_back(s);
  for (const auto& [s, p] : b.support) points.push_back(s);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end(), same_latency), points.end());

  LatencyDistribution out;
  double prev = 0.0;
  for (double s : points) {
    const double f = multirat_lower_bound(std::min(1.0, a.cdf(s)), std::min(1.0, b.cdf(s)));
    if (f - prev > 0.0) out.support.emplace_back(s, f - prev);
    prev = std::max(prev, f);
  }
  // The enumerated failure masses avoid the cancellation in 1 - sum(support)
  // when a path almost surely exists.
  out.failure_prob = a.failure_prob * b.failure_prob;
  return out;
}

ProbWeightedGraph short_chain_graph(double p12, double p23, double p34) {
  return {4, {{0, 1, p12, 1.0}, {1, 2, p23, 1.0}, {2, 3, p34, 1.0}}, 0, 3};
}

ProbWeightedGraph long_range_graph(const PairProbs& p, double rho) {
  return {4,
          {{0, 1, p.p12, rho},
           {0, 2, p.p13, rho},
           {0, 3, p.p14, rho},
           {1, 2, p.p23, rho},
           {1, 3, p.p24, rho},
           {2, 3, p.p34, rho}},
          0,
          3};
}

ProbWeightedGraph multi_rat_graph(double p12_short, double p23_short, double p34_short,
                                  const PairProbs& p_long, double rho) {
  auto g = long_range_graph(p_long, rho);
  const auto chain = short_chain_graph(p12_short, p23_short, p34_short);
  g.edges.insert(g.edges.end(), chain.edges.begin(), chain.edges.end());
  return g;
}

Figure4Row figure4_point(double d_min, double rho, const channel::RatParams& short_rat,
                         const channel::RatParams& long_rat,
                         const channel::ChannelParams& channel) {
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  if (!(rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  const double p1 = channel::link_prob(d_min, short_rat, channel);
  auto p2 = [&](int hops) { return channel::link_prob(hops * d_min, long_rat, channel); };
  const PairProbs lp{p2(1), p2(2), p2(3), p2(1), p2(2), p2(1)};

  const auto short_dist = enumerate_latency(short_chain_graph(p1, p1, p1));
  const auto relay_dist = enumerate_latency(long_range_graph(lp, rho));
  const auto lb_dist = lower_bound_distribution(short_dist, relay_dist);
  const auto joint_dist = enumerate_latency(multi_rat_graph(p1, p1, p1, lp, rho));

  Figure4Row row;
  row.d_min_m = d_min;
  row.err_r1 = short_dist.failure_prob;
  row.err_r2_norelay = 1.0 - lp.p14;
  row.err_r2_relay = relay_dist.failure_prob;
  row.err_multirat_lb = lb_dist.failure_prob;
  row.lat_r1 = short_dist.conditional_mean();
  row.lat_r2_relay = relay_dist.conditional_mean();
  row.lat_multirat_lb = lb_dist.conditional_mean();
  row.lat_r2_norelay = lp.p14 > 0.0 ? rho : std::numeric_limits<double>::quiet_NaN();
  row.err_multirat_joint = joint_dist.failure_prob;
  row.lat_multirat_joint = joint_dist.conditional_mean();
  return row;
}

std::vector<Figure4Row> figure4_sweep(std::span<const double> d_min_grid, double rho,
                                      const channel::RatParams& short_rat,
                                      const channel::RatParams& long_rat,
                                      const channel::ChannelParams& channel) {
  if (d_min_grid.empty()) throw std::invalid_argument("d_min grid is empty");
  double prev = 0.0;
  for (double d : d_min_grid) {
    if (!(d > prev)) throw std::invalid_argument("d_min grid must be positive and ascending");
    prev = d;
  }
  if (!(rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  short_rat.validate();
  long_rat.validate();
  channel.validate();
  std::vector<Figure4Row> rows(d_min_grid.size());
  const auto n = static_cast<std::ptrdiff_t>(d_min_grid.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      rows[static_cast<std::size_t>(k)] =
          figure4_point(d_min_grid[static_cast<std::size_t>(k)], rho, short_rat, long_rat, channel);
    } catch (...) {
#pragma omp critical(mrmesh_figure4_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

std::string figure4_to_csv(std::span<const Figure4Row> rows) {
  std::ostringstream os;
  os << "d_min_m,err_r1,err_r2_norelay,err_r2_relay,err_multirat_lb,lat_r1,lat_r2_relay,"
        "lat_multirat_lb,lat_r2_norelay,err_multirat_joint,lat_multirat_joint\n";
  for (const auto& r : rows) {
    os << fmt6(r.d_min_m) << ',' << fmt6(r.err_r1) << ',' << fmt6(r.err_r2_norelay) << ','
       << fmt6(r.err_r2_relay) << ',' << fmt6(r.err_multirat_lb) << ',' << fmt6(r.lat_r1) << ','
       << fmt6(r.lat_r2_relay) << ',' << fmt6(r.lat_multirat_lb) << ',' << fmt6(r.lat_r2_norelay)
       << ',' << fmt6(r.err_multirat_joint) << ',' << fmt6(r.lat_multirat_joint) << '\n';
  }
  return os.str();
}

}  // namespace mrmesh::linear
