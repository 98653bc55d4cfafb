#include <gtest/gtest.h>

#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mrmesh/simengine.hpp"

using namespace mrmesh;
using namespace mrmesh::sim;
using consensus::kLongRat;
using consensus::kShortRat;
using consensus::Role;

namespace {

std::vector<topology::RatLinkGraph> graphs_for(std::size_t n) {
  return {topology::RatLinkGraph(channel::RatId::kShortRange, n),
          topology::RatLinkGraph(channel::RatId::kLongRange, n)};
}

topology::Deployment line_deployment(std::size_t n) {
  topology::Deployment dep;
  for (std::size_t k = 0; k < n; ++k) dep.positions.push_back({static_cast<double>(k), 0.0});
  return dep;
}

struct RandomRun {
  topology::Deployment dep;
  std::vector<topology::RatLinkGraph> graphs;
  Rng rng;
};

RandomRun random_run(std::uint64_t seed, double r_a) {
  Rng rng(seed);
  auto dep = topology::sample_deployment(rng, {50.0, r_a});
  auto graphs = topology::realize_links(
      dep, std::vector{channel::default_short_range(), channel::default_long_range()}, {}, rng);
  return {std::move(dep), std::move(graphs), Rng(rng())};
}

}  // namespace

TEST(SimEngine, SingleDeviceBecomesMasterWithoutHandshakes) {
  const auto dep = line_deployment(1);
  const auto graphs = graphs_for(1);
  Simulator sim(dep, graphs, {}, Rng(1));
  sim.set_initial_timers(std::vector<DeviceTimers>{{0.5, 1.0, 2.0}});
  const auto m = sim.run();
  EXPECT_EQ(m.n_masters, 1u);
  EXPECT_EQ(m.n_chs, 0u);
  EXPECT_TRUE(m.unique_master);
  EXPECT_DOUBLE_EQ(m.convergence_time_s, 3.5);
  for (int msg = 0; msg < kNumMessages; ++msg) {
    for (int r = 0; r < consensus::kNumRats; ++r) {
      EXPECT_EQ(m.count(static_cast<Message>(msg), r), 0u);
    }
  }
  EXPECT_EQ(sim.network()[0].role, Role::Master);
  EXPECT_TRUE(convergence_check(sim.network(), graphs));
}

TEST(SimEngine, TwoLinkedDevicesFormOneCluster) {
  const auto dep = line_deployment(2);
  auto graphs = graphs_for(2);
  graphs[kShortRat].add_edge(0, 1);
  graphs[kLongRat].add_edge(0, 1);
  Simulator sim(dep, graphs, {}, Rng(1));
  sim.set_initial_timers(std::vector<DeviceTimers>{{0.0, 1.0, 1.0}, {0.5, 10.0, 10.0}});
  const auto m = sim.run();
  // t=1: 0 -> UCH, HELLO(r1) to 1, POKE(UCH,on) makes 1 a UCM of 0.
  // t=2: 0 -> Master; the cascade promotes 1 to CM. No coordinator hears r2.
  EXPECT_EQ(m.n_masters, 1u);
  EXPECT_EQ(m.n_chs, 0u);
  EXPECT_EQ(sim.network()[1].role, Role::CM);
  EXPECT_EQ(sim.network()[1].master, 0);
  EXPECT_EQ(m.count(Message::kHello, kShortRat), 1u);
  EXPECT_EQ(m.count(Message::kHello, kLongRat), 0u);
  EXPECT_EQ(m.count(Message::kPoke, kShortRat), 1u);
  EXPECT_EQ(m.count(Message::kTUpdate, kShortRat), 1u);
  EXPECT_DOUBLE_EQ(m.convergence_time_s, 2.0);
  // Device 1's own promotion timer was cancelled when it joined the cluster.
  EXPECT_FALSE(sim.ch_timer_pending(1));
  EXPECT_FALSE(check_structure(sim.network(), graphs).has_value());
}

TEST(SimEngine, MasterAbsorbsLongRangeUchAsClusterHead) {
  const auto dep = line_deployment(2);
  auto graphs = graphs_for(2);
  graphs[kLongRat].add_edge(0, 1);
  Simulator sim(dep, graphs, {}, Rng(1));
  sim.set_initial_timers(std::vector<DeviceTimers>{{0.0, 1.0, 1.0}, {0.0, 1.5, 1.0}});
  const auto m = sim.run();
  // t=2: 0 -> Master, hears UCH 1 on r2 with equal N_2, takes it as CH.
  EXPECT_EQ(m.n_masters, 1u);
  EXPECT_EQ(m.n_chs, 1u);
  EXPECT_EQ(sim.network()[1].role, Role::CH);
  EXPECT_EQ(sim.network()[1].master, 0);
  EXPECT_EQ(m.count(Message::kHello, kLongRat), 1u);
  EXPECT_EQ(m.count(Message::kPoke, kLongRat), 1u);
  EXPECT_EQ(m.count(Message::kTUpdate, kLongRat), 1u);
  EXPECT_FALSE(sim.m_timer_pending(1));
  EXPECT_TRUE(m.v2_dominated);
  EXPECT_TRUE(m.master_covers_ever_ch);
}

TEST(SimEngine, IsolatedDevicesEachBecomeMaster) {
  const auto dep = line_deployment(3);
  const auto graphs = graphs_for(3);
  Rng rng(4);
  const auto m = run(dep, graphs, {}, rng);
  EXPECT_EQ(m.n_masters, 3u);
  EXPECT_FALSE(m.unique_master);
  EXPECT_FALSE(m.v2_dominated);
}

TEST(SimEngine, CancelTimersOnDiscovery) {
  const auto dep = line_deployment(1);
  const auto graphs = graphs_for(1);
  Simulator sim(dep, graphs, {}, Rng(1));
  EXPECT_FALSE(sim.ch_timer_pending(0));
  EXPECT_FALSE(sim.m_timer_pending(0));
  sim.cancel_timers_on_discovery(0, Role::Master);  // no timers armed: no effect
  EXPECT_FALSE(sim.ch_timer_pending(0));
}

TEST(SimEngine, CountHandshake) {
  RunMetrics m;
  count_handshake(m, Message::kPoke, kLongRat);
  count_handshake(m, Message::kPoke, kLongRat);
  count_handshake(m, Message::kHello, kShortRat);
  EXPECT_EQ(m.count(Message::kPoke, kLongRat), 2u);
  EXPECT_EQ(m.count(Message::kHello, kShortRat), 1u);
  EXPECT_EQ(m.count(Message::kTUpdate, kShortRat), 0u);
}

TEST(SimEngine, RejectsMismatchedInputs) {
  const auto dep = line_deployment(2);
  EXPECT_THROW(Simulator(dep, graphs_for(3), {}, Rng(1)), std::invalid_argument);
  std::vector<topology::RatLinkGraph> one{topology::RatLinkGraph(channel::RatId::kShortRange, 2)};
  EXPECT_THROW(Simulator(dep, one, {}, Rng(1)), std::invalid_argument);
  EXPECT_THROW(Simulator(dep, graphs_for(2), {0.0, 1.0, 1.0}, Rng(1)), std::invalid_argument);
  const auto graphs = graphs_for(2);
  Simulator sim(dep, graphs, {}, Rng(1));
  EXPECT_THROW(sim.set_initial_timers(std::vector<DeviceTimers>{{0, 1, 1}}), std::invalid_argument);
}

TEST(SimEngine, EventCapRaisesNonConvergence) {
  auto r = random_run(3, 500.0);
  ASSERT_GT(r.dep.size(), 5u);
  EXPECT_THROW(Simulator(r.dep, r.graphs, {}, r.rng, {.event_cap = 5}).run(), NonConvergenceError);
}

TEST(SimEngine, SameSeedSameMetrics) {
  auto a = random_run(17, 1000.0);
  auto b = random_run(17, 1000.0);
  const auto ma = Simulator(a.dep, a.graphs, {}, a.rng).run();
  const auto mb = Simulator(b.dep, b.graphs, {}, b.rng).run();
  EXPECT_EQ(ma.handshakes, mb.handshakes);
  EXPECT_EQ(ma.n_masters, mb.n_masters);
  EXPECT_EQ(ma.n_chs, mb.n_chs);
  EXPECT_EQ(ma.convergence_time_s, mb.convergence_time_s);
  EXPECT_EQ(ma.events, mb.events);
}

class SimEngineRandom : public ::testing::TestWithParam<std::tuple<double, consensus::N2View>> {};

TEST_P(SimEngineRandom, RunsConvergeWithValidStructure) {
  const auto [r_a, view] = GetParam();
  EngineOptions opts;
  opts.rules.n2_view = view;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto r = random_run(seed, r_a);
    Simulator sim(r.dep, r.graphs, {}, r.rng, opts);
    const auto m = sim.run();
    const auto err = check_structure(sim.network(), r.graphs);
    ASSERT_FALSE(err.has_value()) << "seed " << seed << ": " << *err;
    ASSERT_TRUE(convergence_check(sim.network(), r.graphs, opts.rules)) << "seed " << seed;
    EXPECT_EQ(m.n_devices, r.dep.size());
    if (m.n_devices > 0) EXPECT_GE(m.n_masters, 1u);
    EXPECT_EQ(m.unique_master, m.n_masters == 1);
    for (int rat = 0; rat < consensus::kNumRats; ++rat) {
      // Every T_UPDATE follows a POKE that changed something.
      EXPECT_LE(m.count(Message::kTUpdate, rat), m.count(Message::kPoke, rat));
    }
    EXPECT_GE(m.convergence_time_s, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Radii, SimEngineRandom,
    ::testing::Combine(::testing::Values(500.0, 1000.0, 2000.0),
                       ::testing::Values(consensus::N2View::kCoordinatorGraph,
                                         consensus::N2View::kKnown)),
    [](const auto& info) {
      return "r" + std::to_string(static_cast<int>(std::get<0>(info.param))) +
             (std::get<1>(info.param) == consensus::N2View::kKnown ? "_known" : "_coordinator");
    });

TEST(SimEngine, CheckStructureReportsViolations) {
  auto graphs = graphs_for(3);
  auto net = consensus::make_network(3);
  EXPECT_TRUE(check_structure(net, graphs).has_value());  // On devices are unsettled
  net[0].role = Role::Master;
  net[0].cluster_head = 0;
  net[0].master = 0;
  net[1].role = Role::CM;
  net[1].cluster_head = 0;
  net[1].master = 0;
  net[2].role = Role::CH;
  net[2].cluster_head = 2;
  net[2].master = 0;
  auto err = check_structure(net, graphs);
  ASSERT_TRUE(err.has_value());
  EXPECT_NE(err->find("device 1"), std::string::npos);
  graphs[kShortRat].add_edge(0, 1);
  err = check_structure(net, graphs);
  ASSERT_TRUE(err.has_value());
  EXPECT_NE(err->find("device 2"), std::string::npos);
  graphs[kLongRat].add_edge(0, 2);
  EXPECT_FALSE(check_structure(net, graphs).has_value());
}
