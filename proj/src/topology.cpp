#include "mrmesh/topology.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mrmesh/format.hpp"

namespace mrmesh {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mrmesh

namespace mrmesh::topology {

void DeploymentConfig::validate() const {
  if (!(intensity > 0.0)) throw std::invalid_argument("deployment intensity must be > 0");
  if (!(radius_m > 0.0)) throw std::invalid_argument("deployment radius must be > 0");
}

double Deployment::distance(DeviceId a, DeviceId b) const {
  const auto& p = positions.at(static_cast<std::size_t>(a));
  const auto& q = positions.at(static_cast<std::size_t>(b));
  return std::hypot(p.x - q.x, p.y - q.y);
}

Deployment sample_deployment(Rng& rng, const DeploymentConfig& config) {
  config.validate();
  std::poisson_distribution<long> count(config.intensity);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long n = count(rng);
  Deployment dep;
  dep.positions.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) {
    const double r = config.radius_m * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    dep.positions.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return dep;
}

RatLinkGraph::RatLinkGraph(channel::RatId rat, std::size_t n) : rat_(rat), adjacency_(n) {}

void RatLinkGraph::check(DeviceId i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= adjacency_.size()) {
    throw std::out_of_range("unknown device id " + std::to_string(i));
  }
}

void RatLinkGraph::add_edge(DeviceId a, DeviceId b) {
  check(a);
  check(b);
  if (a == b) throw std::invalid_argument("self-links are not allowed");
  auto insert = [](std::vector<DeviceId>& v, DeviceId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert(adjacency_[static_cast<std::size_t>(a)], b);
  insert(adjacency_[static_cast<std::size_t>(b)], a);
}

bool RatLinkGraph::adjacent(DeviceId a, DeviceId b) const {
  check(a);
  check(b);
  const auto& v = adjacency_[static_cast<std::size_t>(a)];
  return std::binary_search(v.begin(), v.end(), b);
}

std::span<const DeviceId> RatLinkGraph::neighbors(DeviceId i) const {
  check(i);
  return adjacency_[static_cast<std::size_t>(i)];
}

std::size_t RatLinkGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& v : adjacency_) twice += v.size();
  return twice / 2;
}

std::vector<RatLinkGraph> realize_links(const Deployment& deployment,
                                        std::span<const channel::RatParams> rats,
                                        const channel::ChannelParams& channel, Rng& rng) {
  const auto n = deployment.size();
  std::vector<RatLinkGraph> graphs;
  graphs.reserve(rats.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& rat : rats) {
    RatLinkGraph g(rat.id, n);
    for (DeviceId i = 0; static_cast<std::size_t>(i) < n; ++i) {
      for (DeviceId j = i + 1; static_cast<std::size_t>(j) < n; ++j) {
        const double d = deployment.distance(i, j);
        // Coincident points are treated as a certain link.
        const double p = d > 0.0 ? channel::link_prob(d, rat, channel) : 1.0;
        if (unit(rng) < p) g.add_edge(i, j);
      }
    }
    graphs.push_back(std::move(g));
  }
  return graphs;
}

std::vector<DeviceId> neighborhood(const RatLinkGraph& graph, DeviceId i, bool closed) {
  auto open = graph.neighbors(i);
  std::vector<DeviceId> out(open.begin(), open.end());
  if (closed) out.insert(std::lower_bound(out.begin(), out.end(), i), i);
  return out;
}

GraphStats graph_stats(const RatLinkGraph& graph) {
  const auto n = graph.size();
  GraphStats stats;
  stats.degrees.resize(n);
  std::vector<char> seen(n, 0);
  std::vector<DeviceId> stack;
  for (std::size_t s = 0; s < n; ++s) {
    stats.degrees[s] = graph.neighbors(static_cast<DeviceId>(s)).size();
    if (seen[s]) continue;
    ++stats.components;
    seen[s] = 1;
    stack.push_back(static_cast<DeviceId>(s));
    while (!stack.empty()) {
      const DeviceId v = stack.back();
      stack.pop_back();
      for (DeviceId w : graph.neighbors(v)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  stats.connected = stats.components <= 1;
  return stats;
}

void write_deployment(std::ostream& os, const Deployment& deployment) {
  os << "id,x,y\n";
  for (std::size_t i = 0; i < deployment.size(); ++i) {
    // Full precision so that replayed distances are exact.
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, deployment.positions[i].x,
                  deployment.positions[i].y);
    os << buf;
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

Deployment read_deployment(std::istream& is) {
  Deployment dep;
  std::string line;
  if (!std::getline(is, line) || line != "id,x,y") {
    throw std::runtime_error("deployment: missing `id,x,y` header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw std::runtime_error("deployment: malformed line `" + line + "`");
    if (std::stoul(f[0]) != dep.size()) {
      throw std::runtime_error("deployment: ids must be contiguous from 0");
    }
    dep.positions.push_back({std::stod(f[1]), std::stod(f[2])});
  }
  return dep;
}

void write_edges(std::ostream& os, std::span<const RatLinkGraph> graphs) {
  os << "rat,i,j\n";
  for (const auto& g : graphs) {
    for (DeviceId i = 0; static_cast<std::size_t>(i) < g.size(); ++i) {
      for (DeviceId j : g.neighbors(i)) {
        if (j > i) os << static_cast<int>(g.rat()) << ',' << i << ',' << j << '\n';
      }
    }
  }
}

std::vector<RatLinkGraph> read_edges(std::istream& is, std::size_t n_devices) {
  std::vector<RatLinkGraph> graphs{RatLinkGraph(channel::RatId::kShortRange, n_devices),
                                   RatLinkGraph(channel::RatId::kLongRange, n_devices)};
  std::string line;
  if (!std::getline(is, line) || line != "rat,i,j") {
    throw std::runtime_error("edges: missing `rat,i,j` header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw std::runtime_error("edges: malformed line `" + line + "`");
    const int rat = std::stoi(f[0]);
    if (rat != 1 && rat != 2) throw std::runtime_error("edges: unknown RAT " + f[0]);
    graphs[static_cast<std::size_t>(rat - 1)].add_edge(std::stoi(f[1]), std::stoi(f[2]));
  }
  return graphs;
}

}  // namespace mrmesh::topology
