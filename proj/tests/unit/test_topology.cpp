#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mrmesh/topology.hpp"

using namespace mrmesh;
using namespace mrmesh::topology;

namespace {

std::vector<channel::RatParams> default_rats() {
  return {channel::default_short_range(), channel::default_long_range()};
}

}  // namespace

TEST(Topology, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Topology, DeploymentPointsLieInDisk) {
  Rng rng(42);
  const DeploymentConfig cfg{50.0, 500.0};
  for (int k = 0; k < 50; ++k) {
    const auto dep = sample_deployment(rng, cfg);
    for (const auto& p : dep.positions) EXPECT_LE(std::hypot(p.x, p.y), 500.0 + 1e-9);
  }
}

TEST(Topology, DeviceCountHasPoissonMean) {
  Rng rng(7);
  const DeploymentConfig cfg{50.0, 1000.0};
  const int trials = 4000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    const auto n = static_cast<double>(sample_deployment(rng, cfg).size());
    sum += n;
    sq += n * n;
  }
  const double mean = sum / trials;
  const double var = sq / trials - mean * mean;
  EXPECT_NEAR(mean, 50.0, 0.5);     // ~4.5 standard errors
  EXPECT_NEAR(var, 50.0, 5.0);
}

TEST(Topology, RadialDistributionIsUniformOverArea) {
  Rng rng(11);
  const DeploymentConfig cfg{200.0, 1.0};
  std::size_t inner = 0, total = 0;
  for (int k = 0; k < 200; ++k) {
    for (const auto& p : sample_deployment(rng, cfg).positions) {
      inner += std::hypot(p.x, p.y) < std::sqrt(0.5);
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(inner) / static_cast<double>(total), 0.5, 0.01);
}

TEST(Topology, ConfigValidation) {
  EXPECT_THROW((DeploymentConfig{0.0, 500.0}.validate()), std::invalid_argument);
  EXPECT_THROW((DeploymentConfig{50.0, -1.0}.validate()), std::invalid_argument);
}

TEST(Topology, GraphRejectsSelfLoopsAndOutOfRange) {
  RatLinkGraph g(channel::RatId::kShortRange, 3);
  EXPECT_THROW(g.add_edge(1, 1), std::invalid_argument);
  EXPECT_THROW(g.add_edge(0, 3), std::out_of_range);
  g.add_edge(2, 0);
  g.add_edge(0, 2);  // idempotent
  EXPECT_TRUE(g.adjacent(0, 2));
  EXPECT_TRUE(g.adjacent(2, 0));
  EXPECT_FALSE(g.adjacent(0, 1));
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Topology, NeighborhoodsAreSorted) {
  RatLinkGraph g(channel::RatId::kLongRange, 5);
  g.add_edge(2, 4);
  g.add_edge(2, 0);
  g.add_edge(2, 3);
  EXPECT_EQ(neighborhood(g, 2, false), (std::vector<DeviceId>{0, 3, 4}));
  EXPECT_EQ(neighborhood(g, 2, true), (std::vector<DeviceId>{0, 2, 3, 4}));
  EXPECT_EQ(neighborhood(g, 1, true), (std::vector<DeviceId>{1}));
}

TEST(Topology, GraphStatsCountsComponents) {
  RatLinkGraph g(channel::RatId::kShortRange, 5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(3, 4);
  const auto s = graph_stats(g);
  EXPECT_FALSE(s.connected);
  EXPECT_EQ(s.components, 2u);
  EXPECT_EQ(s.degrees, (std::vector<std::size_t>{1, 2, 1, 1, 1}));
  g.add_edge(2, 3);
  EXPECT_TRUE(graph_stats(g).connected);
}

TEST(Topology, LinkRealizationIsDeterministic) {
  const auto rats = default_rats();
  Rng a(99), b(99);
  const auto dep_a = sample_deployment(a, {50.0, 1000.0});
  const auto dep_b = sample_deployment(b, {50.0, 1000.0});
  const auto ga = realize_links(dep_a, rats, {}, a);
  const auto gb = realize_links(dep_b, rats, {}, b);
  ASSERT_EQ(ga.size(), 2u);
  EXPECT_EQ(ga, gb);
}

TEST(Topology, ShortRangeLinksFollowTheLosCutoff) {
  const auto rats = default_rats();
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto dep = sample_deployment(rng, {50.0, 1000.0});
    const auto g = realize_links(dep, rats, {}, rng);
    for (DeviceId i = 0; static_cast<std::size_t>(i) < dep.size(); ++i) {
      for (DeviceId j : g[0].neighbors(i)) {
        // Beyond d_LoS + w the short-range outage exceeds 1 - 1e-6.
        EXPECT_LT(dep.distance(i, j), 296.0);
      }
    }
  }
}

TEST(Topology, EmpiricalLinkFrequencyMatchesProbability) {
  // Two devices 2 km apart; the long-range link exists with p ~= 0.64.
  Deployment dep{{{0.0, 0.0}, {2000.0, 0.0}}};
  const auto rats = default_rats();
  const double p = channel::link_prob(2000.0, rats[1], {});
  Rng rng(3);
  int hits = 0;
  const int trials = 20000;
  for (int k = 0; k < trials; ++k) hits += realize_links(dep, rats, {}, rng)[1].adjacent(0, 1);
  EXPECT_NEAR(static_cast<double>(hits) / trials, p, 0.015);
}

TEST(Topology, CoincidentDevicesAreLinked) {
  Deployment dep{{{10.0, 10.0}, {10.0, 10.0}}};
  Rng rng(1);
  const auto g = realize_links(dep, default_rats(), {}, rng);
  EXPECT_TRUE(g[0].adjacent(0, 1));
  EXPECT_TRUE(g[1].adjacent(0, 1));
}

TEST(Topology, SerializationRoundTrip) {
  Rng rng(21);
  const auto dep = sample_deployment(rng, {30.0, 800.0});
  const auto graphs = realize_links(dep, default_rats(), {}, rng);

  std::stringstream ds;
  write_deployment(ds, dep);
  const auto dep2 = read_deployment(ds);
  ASSERT_EQ(dep2.size(), dep.size());
  for (std::size_t k = 0; k < dep.size(); ++k) {
    EXPECT_EQ(dep2.positions[k].x, dep.positions[k].x);
    EXPECT_EQ(dep2.positions[k].y, dep.positions[k].y);
  }

  std::stringstream es;
  write_edges(es, graphs);
  EXPECT_EQ(read_edges(es, dep.size()), graphs);
}

TEST(Topology, ReadRejectsMalformedInput) {
  std::stringstream bad("id,x,y\n0,1.0\n");
  EXPECT_THROW(read_deployment(bad), std::runtime_error);
  std::stringstream bad_edges("rat,i,j\n3,0,1\n");
  EXPECT_THROW(read_edges(bad_edges, 2), std::runtime_error);
}
