#include "mrmesh/simengine.hpp"

#include <algorithm>
#include <sstream>

namespace mrmesh::sim {

using consensus::DeviceState;
using consensus::kLongRat;
using consensus::kShortRat;
using consensus::Role;

void TimerConfig::validate() const {
  if (!(lambda_on > 0.0 && lambda_ch > 0.0 && lambda_m > 0.0)) {
    throw std::invalid_argument("timer rates must be > 0");
  }
}

void LinearScenario::validate() const {
  if (!(rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  if (!(d_min_m > 0.0)) throw std::invalid_argument("d_min must be > 0");
}

void count_handshake(RunMetrics& metrics, Message message, int rat_index) {
  ++metrics.handshakes[static_cast<std::size_t>(message)][static_cast<std::size_t>(rat_index)];
}

Simulator::Simulator(const topology::Deployment& deployment,
                     std::span<const topology::RatLinkGraph> graphs, const TimerConfig& timers,
                     Rng rng, EngineOptions options)
    : deployment_(deployment),
      graphs_(graphs),
      timers_(timers),
      rng_(rng),
      options_(options),
      network_(consensus::make_network(deployment.size())),
      powered_(deployment.size(), 0),
      timer_state_(deployment.size()),
      ever_roles_(deployment.size(), 0) {
  timers_.validate();
  if (graphs_.size() != static_cast<std::size_t>(consensus::kNumRats)) {
    throw std::invalid_argument("simulation needs one link graph per RAT");
  }
  for (const auto& g : graphs_) {
    if (g.size() != deployment.size()) {
      throw std::invalid_argument("link graph size does not match the deployment");
    }
  }
}

void Simulator::set_initial_timers(std::span<const DeviceTimers> timers) {
  if (timers.size() != deployment_.size()) {
    throw std::invalid_argument("one timer triple per device is required");
  }
  initial_timers_.emplace(timers.begin(), timers.end());
}

double Simulator::draw_exp(double rate) {
  std::exponential_distribution<double> exp(rate);
  return exp(rng_);
}

void Simulator::push(Event e) {
  e.seq = next_seq_++;
  queue_.push(e);
}

void Simulator::arm_ch_timer(DeviceId i, double delay) {
  auto& t = timer_state_[static_cast<std::size_t>(i)];
  ++t.ch_gen;
  t.ch_armed = true;
  push({.time = now_ + delay, .kind = EventKind::kChTimerFire, .device = i, .generation = t.ch_gen});
}

void Simulator::arm_m_timer(DeviceId i, double delay) {
  auto& t = timer_state_[static_cast<std::size_t>(i)];
  ++t.m_gen;
  t.m_armed = true;
  push({.time = now_ + delay, .kind = EventKind::kMTimerFire, .device = i, .generation = t.m_gen});
}

bool Simulator::ch_timer_pending(DeviceId i) const {
  return timer_state_.at(static_cast<std::size_t>(i)).ch_armed;
}

bool Simulator::m_timer_pending(DeviceId i) const {
  return timer_state_.at(static_cast<std::size_t>(i)).m_armed;
}

void Simulator::cancel_timers_on_discovery(DeviceId i, Role discoverer_role) {
  const auto& d = network_.at(static_cast<std::size_t>(i));
  auto& t = timer_state_[static_cast<std::size_t>(i)];
  const bool coordinator = discoverer_role == Role::CH || discoverer_role == Role::Master;
  if (coordinator && d.role != Role::On) t.ch_armed = false;
  if (discoverer_role == Role::Master && d.role != Role::UnmasteredCH) t.m_armed = false;
}

void Simulator::mark_role(DeviceId i) {
  ever_roles_[static_cast<std::size_t>(i)] |=
      static_cast<std::uint8_t>(1u << static_cast<unsigned>(network_[static_cast<std::size_t>(i)].role));
}

void Simulator::learn(DeviceId a, DeviceId b, int rat) {
  auto insert = [rat](DeviceState& d, DeviceId x) {
    auto& v = d.known[static_cast<std::size_t>(rat)];
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert(network_[static_cast<std::size_t>(a)], b);
  insert(network_[static_cast<std::size_t>(b)], a);
}

RunMetrics Simulator::run() {
  metrics_ = RunMetrics{};
  metrics_.n_devices = deployment_.size();
  for (DeviceId i = 0; static_cast<std::size_t>(i) < deployment_.size(); ++i) {
    const double t_on = initial_timers_ ? (*initial_timers_)[static_cast<std::size_t>(i)].power_on_s
                                        : draw_exp(timers_.lambda_on);
    push({.time = t_on, .kind = EventKind::kPowerOn, .device = i});
  }

  for (;;) {
    while (!queue_.empty()) {
      const Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      if (++metrics_.events > options_.event_cap) {
        std::ostringstream os;
        os << "no quiescence after " << options_.event_cap << " events (t=" << now_
           << " s, " << deployment_.size() << " devices); rule tables may livelock";
        throw NonConvergenceError(os.str());
      }
      handle(e);
    }
    const auto actions = consensus::enabled_actions(network_, graphs_, options_.rules);
    if (actions.empty()) break;
    ++metrics_.quiescence_sweeps;
    const auto& a = actions.front();
    push({.time = now_, .kind = EventKind::kPoke, .device = a.initiator, .peer = a.target,
          .rat_index = a.rat_index});
  }

  RunMetrics out = metrics_;
  finalize(out);
  return out;
}

void Simulator::handle(const Event& e) {
  switch (e.kind) {
    case EventKind::kPowerOn: on_power_on(e.device); break;
    case EventKind::kChTimerFire: on_ch_timer(e.device, e.generation); break;
    case EventKind::kMTimerFire: on_m_timer(e.device, e.generation); break;
    case EventKind::kStartDiscovery: on_discovery(e.device, e.rat_index); break;
    case EventKind::kPoke: on_poke(e); break;
  }
}

void Simulator::on_power_on(DeviceId i) {
  powered_[static_cast<std::size_t>(i)] = 1;
  mark_role(i);
  const double delay = initial_timers_ ? (*initial_timers_)[static_cast<std::size_t>(i)].ch_delay_s
                                       : draw_exp(timers_.lambda_ch);
  arm_ch_timer(i, delay);
}

void Simulator::on_ch_timer(DeviceId i, std::uint32_t gen) {
  auto& t = timer_state_[static_cast<std::size_t>(i)];
  if (!t.ch_armed || gen != t.ch_gen) return;
  t.ch_armed = false;
  if (network_[static_cast<std::size_t>(i)].role != Role::On) return;
  std::vector<Role> before;
  before.reserve(network_.size());
  for (const auto& d : network_) before.push_back(d.role);
  const auto res = consensus::apply_changes(network_, {consensus::SetRole{i, Role::UnmasteredCH}},
                                            options_.rules);
  after_change(res.affected, before);
}

void Simulator::on_m_timer(DeviceId i, std::uint32_t gen) {
  auto& t = timer_state_[static_cast<std::size_t>(i)];
  if (!t.m_armed || gen != t.m_gen) return;
  t.m_armed = false;
  if (network_[static_cast<std::size_t>(i)].role != Role::UnmasteredCH) return;
  std::vector<Role> before;
  before.reserve(network_.size());
  for (const auto& d : network_) before.push_back(d.role);
  const auto res = consensus::apply_changes(
      network_,
      {consensus::SetRole{i, Role::Master}, consensus::SetClusterHead{i, i},
       consensus::SetMaster{i, i}},
      options_.rules);
  after_change(res.affected, before);
}

void Simulator::on_discovery(DeviceId i, int rat) {
  const Role role = network_[static_cast<std::size_t>(i)].role;
  if (rat == kShortRat && role != Role::UnmasteredCH) return;
  if (rat == kLongRat && role != Role::Master) return;

  const auto& graph = graphs_[static_cast<std::size_t>(rat)];
  for (DeviceId j : graph.neighbors(i)) {
    if (!powered_[static_cast<std::size_t>(j)]) continue;
    const auto& dj = network_[static_cast<std::size_t>(j)];
    if (network_[static_cast<std::size_t>(i)].knows(rat, j)) continue;
    // Only coordinators listen on the long-range RAT.
    if (rat == kLongRat && !consensus::is_head(dj.role)) continue;
    count_handshake(metrics_, Message::kHello, rat);
    learn(i, j, rat);
  }
  for (DeviceId j : network_[static_cast<std::size_t>(i)].known[static_cast<std::size_t>(rat)]) {
    push({.time = now_, .kind = EventKind::kPoke, .device = i, .peer = j, .rat_index = rat,
          .sweep = true});
  }
}

void Simulator::on_poke(const Event& e) {
  const auto outcome =
      consensus::match_rule(network_, graphs_, e.device, e.peer, e.rat_index, options_.rules);
  const bool nontrivial = consensus::is_nontrivial(outcome, network_);
  if (!e.sweep && !nontrivial) return;
  count_handshake(metrics_, Message::kPoke, e.rat_index);
  if (nontrivial) execute(e.device, outcome, e.rat_index);
}

bool Simulator::execute(DeviceId initiator, const consensus::RuleOutcome& outcome, int rat) {
  std::vector<Role> before;
  before.reserve(network_.size());
  for (const auto& d : network_) before.push_back(d.role);
  const Role initiator_role = network_[static_cast<std::size_t>(initiator)].role;
  const auto res = consensus::apply_changes(network_, outcome.changes, options_.rules);
  if (res.affected.empty()) return false;
  count_handshake(metrics_, Message::kTUpdate, rat);
  for (DeviceId t : outcome.affected_devices) {
    if (t != initiator) cancel_timers_on_discovery(t, initiator_role);
  }
  after_change(res.affected, before);
  return true;
}

void Simulator::after_change(std::span<const DeviceId> affected, std::span<const Role> before) {
  last_change_ = now_;
  for (DeviceId a : affected) {
    const Role old_role = before[static_cast<std::size_t>(a)];
    const Role new_role = network_[static_cast<std::size_t>(a)].role;
    mark_role(a);
    auto& t = timer_state_[static_cast<std::size_t>(a)];
    if (new_role != Role::On) t.ch_armed = false;
    if (new_role != Role::UnmasteredCH) t.m_armed = false;
    if (new_role == old_role) continue;
    if (new_role == Role::On) {
      arm_ch_timer(a, draw_exp(timers_.lambda_ch));
    } else if (new_role == Role::UnmasteredCH) {
      const bool first = initial_timers_ && !t.initial_m_used;
      t.initial_m_used = true;
      const double delay = first ? (*initial_timers_)[static_cast<std::size_t>(a)].m_delay_s
                                 : draw_exp(timers_.lambda_m);
      arm_m_timer(a, delay);
      push({.time = now_, .kind = EventKind::kStartDiscovery, .device = a, .rat_index = kShortRat});
    } else if (new_role == Role::Master) {
      push({.time = now_, .kind = EventKind::kStartDiscovery, .device = a, .rat_index = kLongRat});
    }
  }
  for (DeviceId a : affected) schedule_reevaluation(a);
  if (options_.rules.n2_view == consensus::N2View::kCoordinatorGraph) {
    // A device entering or leaving the coordinator set changes N_2[.] of its
    // long-range neighbors, so their long-range pairs are evaluated again.
    for (DeviceId a : affected) {
      const bool was = consensus::is_head(before[static_cast<std::size_t>(a)]);
      const bool is = consensus::is_head(network_[static_cast<std::size_t>(a)].role);
      if (was == is) continue;
      for (DeviceId k : graphs_[kLongRat].neighbors(a)) {
        if (consensus::is_head(network_[static_cast<std::size_t>(k)].role)) {
          schedule_reevaluation(k, kLongRat);
        }
      }
    }
  }
}

void Simulator::schedule_reevaluation(DeviceId a, std::optional<int> only_rat) {
  for (int r = 0; r < consensus::kNumRats; ++r) {
    if (only_rat && r != *only_rat) continue;
    for (DeviceId j : network_[static_cast<std::size_t>(a)].known[static_cast<std::size_t>(r)]) {
      push({.time = now_, .kind = EventKind::kPoke, .device = a, .peer = j, .rat_index = r});
      push({.time = now_, .kind = EventKind::kPoke, .device = j, .peer = a, .rat_index = r});
    }
  }
}

namespace {

bool some_vertex_dominates(const std::vector<DeviceId>& set, const topology::RatLinkGraph& g) {
  if (set.size() <= 1) return true;
  for (DeviceId v : set) {
    bool all = true;
    for (DeviceId w : set) {
      if (w != v && !g.adjacent(v, w)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

}  // namespace

void Simulator::finalize(RunMetrics& m) const {
  constexpr auto bit = [](Role r) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r)); };
  std::vector<DeviceId> ever_coord, final_coord, ever_ch;
  std::optional<DeviceId> master;
  for (const auto& d : network_) {
    if (d.role == Role::Master) {
      ++m.n_masters;
      master = d.id;
    }
    if (d.role == Role::CH) ++m.n_chs;
    if (d.role == Role::CH || d.role == Role::Master) final_coord.push_back(d.id);
    const auto ever = ever_roles_[static_cast<std::size_t>(d.id)];
    if (ever & (bit(Role::UnmasteredCH) | bit(Role::CH) | bit(Role::Master))) {
      ever_coord.push_back(d.id);
    }
    if (ever & (bit(Role::CH) | bit(Role::Master))) ever_ch.push_back(d.id);
  }
  m.unique_master = m.n_masters == 1;
  m.convergence_time_s = last_change_;
  const auto& g2 = graphs_[static_cast<std::size_t>(kLongRat)];
  m.ever_coordinator_dominated = some_vertex_dominates(ever_coord, g2);
  m.final_coordinator_dominated = some_vertex_dominates(final_coord, g2);
  m.v2_dominated = some_vertex_dominates(ever_ch, g2);
  if (m.unique_master) {
    m.master_covers_ever_ch = std::all_of(ever_ch.begin(), ever_ch.end(), [&](DeviceId v) {
      return v == *master || g2.adjacent(*master, v);
    });
  }
}

RunMetrics run(const topology::Deployment& deployment,
               std::span<const topology::RatLinkGraph> graphs, const TimerConfig& timers,
               Rng& rng, const EngineOptions& options) {
  Simulator sim(deployment, graphs, timers, Rng(rng()), options);
  return sim.run();
}

bool convergence_check(const consensus::Network& network,
                       std::span<const topology::RatLinkGraph> graphs,
                       const consensus::RuleOptions& options) {
  return consensus::enabled_actions(network, graphs, options).empty();
}

std::optional<std::string> check_structure(const consensus::Network& network,
                                           std::span<const topology::RatLinkGraph> graphs) {
  auto fail = [](DeviceId id, const std::string& what) {
    return std::optional<std::string>("device " + std::to_string(id) + ": " + what);
  };
  for (const auto& d : network) {
    if (auto err = d.invariant_violation()) return err;
    switch (d.role) {
      case Role::CM: {
        const auto& h = network[static_cast<std::size_t>(*d.cluster_head)];
        if (h.role != Role::CH && h.role != Role::Master) return fail(d.id, "head is not CH/Master");
        if (!graphs[kShortRat].adjacent(d.id, h.id)) return fail(d.id, "no short-range link to head");
        const auto expected = h.role == Role::Master ? h.id : *h.master;
        if (*d.master != expected) return fail(d.id, "master differs from head's master");
        break;
      }
      case Role::CH: {
        const auto& m = network[static_cast<std::size_t>(*d.master)];
        if (m.role != Role::Master) return fail(d.id, "master is not a Master");
        if (!graphs[kLongRat].adjacent(d.id, m.id)) return fail(d.id, "no long-range link to master");
        break;
      }
      case Role::Master:
        break;
      default:
        return fail(d.id, std::string("unsettled role ") + std::string(consensus::to_string(d.role)));
    }
  }
  return std::nullopt;
}

}  // namespace mrmesh::sim
