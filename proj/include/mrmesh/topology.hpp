// Device deployments (Poisson point process on a disk) and per-RAT link graphs
// realized once per run from pairwise link probabilities.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mrmesh/channel.hpp"

namespace mrmesh {

using DeviceId = std::int32_t;
using Rng = std::mt19937_64;

/// Per-run stream seed derived from a master seed and a run index.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream);

}  // namespace mrmesh

namespace mrmesh::topology {

struct DeploymentConfig {
  double intensity = 50.0;    ///< expected device count in the disk
  double radius_m = 500.0;

  void validate() const;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Deployment {
  std::vector<Position> positions;  ///< index == device id

  std::size_t size() const { return positions.size(); }
  double distance(DeviceId a, DeviceId b) const;
};

Deployment sample_deployment(Rng& rng, const DeploymentConfig& config);

/// Undirected, irreflexive adjacency over device ids 0..n-1 for one RAT.
class RatLinkGraph {
 public:
  RatLinkGraph() = default;
  RatLinkGraph(channel::RatId rat, std::size_t n);

  channel::RatId rat() const { return rat_; }
  std::size_t size() const { return adjacency_.size(); }

  /// Adds the edge {a,b}. Self-loops are rejected.
  void add_edge(DeviceId a, DeviceId b);
  bool adjacent(DeviceId a, DeviceId b) const;
  /// Sorted open neighborhood.
  std::span<const DeviceId> neighbors(DeviceId i) const;
  std::size_t edge_count() const;

  friend bool operator==(const RatLinkGraph&, const RatLinkGraph&) = default;

 private:
  void check(DeviceId i) const;

  channel::RatId rat_ = channel::RatId::kShortRange;
  std::vector<std::vector<DeviceId>> adjacency_;
};

/// One Bernoulli draw per unordered pair and RAT, in RAT-major then
/// lexicographic pair order.
std::vector<RatLinkGraph> realize_links(const Deployment& deployment,
                                        std::span<const channel::RatParams> rats,
                                        const channel::ChannelParams& channel, Rng& rng);

/// Open neighborhood N(i), or the closed one N[i] = N(i) + {i}; sorted.
std::vector<DeviceId> neighborhood(const RatLinkGraph& graph, DeviceId i, bool closed);

struct GraphStats {
  bool connected = true;
  std::size_t components = 0;
  std::vector<std::size_t> degrees;
};

GraphStats graph_stats(const RatLinkGraph& graph);

// Line-oriented text: deployments as `id,x,y`, graphs as `rat,i,j` edge lists
// (i < j). Both carry a header line.
void write_deployment(std::ostream& os, const Deployment& deployment);
Deployment read_deployment(std::istream& is);
void write_edges(std::ostream& os, std::span<const RatLinkGraph> graphs);
std::vector<RatLinkGraph> read_edges(std::istream& is, std::size_t n_devices);

}  // namespace mrmesh::topology
