// Exact reliability and latency of small random weighted graphs, with the
// closed forms for the four-node linear network (nodes 1..4, source 1,
// destination 4) and a brute-force edge-subset enumeration to check them.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrmesh/channel.hpp"

namespace mrmesh::linear {

inline constexpr std::size_t kMaxVertices = 16;
inline constexpr std::size_t kMaxEdges = 24;

/// Undirected edge present independently with probability `p`.
struct WeightedEdge {
  int a = 0;
  int b = 0;
  double p = 1.0;
  double weight = 1.0;  ///< time units to traverse
};

struct ProbWeightedGraph {
  int n_vertices = 0;
  std::vector<WeightedEdge> edges;
  int source = 0;
  int destination = 0;

  void validate() const;
};

/// Distribution of the shortest-path latency S; `support` is sorted by
/// latency and excludes the no-path event.
struct LatencyDistribution {
  std::vector<std::pair<double, double>> support;  ///< (latency, probability)
  double failure_prob = 0.0;

  double success_prob() const;
  /// Probability mass at latency `s` (0 when absent).
  double mass_at(double s) const;
  /// F_S(s) = Pr[S <= s], with the no-path event never counted.
  double cdf(double s) const;
  /// E[S | a path exists]; NaN when no path can exist.
  double conditional_mean() const;
};

/// Exact distribution by iterating all 2^|E| edge subsets.
LatencyDistribution enumerate_latency(const ProbWeightedGraph& graph);

/// Pr[some source-destination path exists].
double reliability(const ProbWeightedGraph& graph);

/// Short-range chain 1-2-3-4: every hop must exist.
double closed_form_short_chain(double p12, double p23, double p34);

/// Long-range pair probabilities of the four-node network.
struct PairProbs {
  double p12 = 0, p13 = 0, p14 = 0, p23 = 0, p24 = 0, p34 = 0;
};

/// Pr[S = 2 rho]: a two-hop relay path exists and the direct link does not.
double closed_form_two_hop(const PairProbs& p);
/// Pr[S = 3 rho]: only the three-hop paths through the 2-3 link exist.
double closed_form_three_hop(const PairProbs& p);

/// Independent-RAT lower bound on the multi-RAT CDF at one latency.
double multirat_lower_bound(double f1, double f2);

/// Distribution whose CDF is the pointwise lower bound combining `a` and `b`.
LatencyDistribution lower_bound_distribution(const LatencyDistribution& a,
                                             const LatencyDistribution& b);

// Graph builders on vertices 0..3 (node k is vertex k-1).
ProbWeightedGraph short_chain_graph(double p12, double p23, double p34);
ProbWeightedGraph long_range_graph(const PairProbs& p, double rho);
/// Both RATs at once: the short chain (weight 1) plus all long-range pairs
/// (weight rho) as parallel edges.
ProbWeightedGraph multi_rat_graph(double p12_short, double p23_short, double p34_short,
                                  const PairProbs& p_long, double rho);

struct Figure4Row {
  double d_min_m = 0;
  double err_r1 = 0;
  double err_r2_norelay = 0;
  double err_r2_relay = 0;
  double err_multirat_lb = 0;
  double lat_r1 = 0;
  double lat_r2_relay = 0;
  double lat_multirat_lb = 0;
  double lat_r2_norelay = 0;
  double err_multirat_joint = 0;
  double lat_multirat_joint = 0;
};

/// Error probabilities and E[S | path] over a grid of node spacings; link
/// probabilities come from the channel model with d_ij = |i-j| d_min and no
/// short-range links beyond adjacent nodes. Rows are computed in parallel.
std::vector<Figure4Row> figure4_sweep(std::span<const double> d_min_grid, double rho,
                                      const channel::RatParams& short_rat,
                                      const channel::RatParams& long_rat,
                                      const channel::ChannelParams& channel);

/// One sweep row; the serial building block of figure4_sweep.
Figure4Row figure4_point(double d_min_m, double rho, const channel::RatParams& short_rat,
                         const channel::RatParams& long_rat,
                         const channel::ChannelParams& channel);

std::string figure4_to_csv(std::span<const Figure4Row> rows);

}  // namespace mrmesh::linear
