// Discrete-event simulation of the setup phase on one deployment: power-on,
// promotion timers, HELLO discovery, POKE/T_UPDATE consensus, quiescence.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrmesh/consensus.hpp"
#include "mrmesh/topology.hpp"

namespace mrmesh::sim {

struct TimerConfig {
  double lambda_on = 0.1;  ///< power-on rate, 1/s
  double lambda_ch = 0.2;  ///< On -> UCH promotion rate, 1/s
  double lambda_m = 0.2;   ///< UCH -> Master promotion rate, 1/s

  void validate() const;
};

/// Scenario of the four-node linear network; shared with the linear analysis.
struct LinearScenario {
  double rho = 5.0;
  double d_min_m = 100.0;

  void validate() const;
};

enum class Message : int { kHello = 0, kPoke = 1, kTUpdate = 2 };
inline constexpr int kNumMessages = 3;

struct RunMetrics {
  std::size_t n_devices = 0;
  std::size_t n_masters = 0;
  std::size_t n_chs = 0;
  /// handshakes[message][rat index]
  std::array<std::array<std::uint64_t, consensus::kNumRats>, kNumMessages> handshakes{};
  double convergence_time_s = 0.0;
  bool unique_master = false;

  // Diagnostics beyond the per-run CSV row.
  std::uint64_t events = 0;
  std::uint64_t quiescence_sweeps = 0;  ///< actions found only by the final sweep
  /// Some device that ever held UCH, CH or Master is long-range adjacent to
  /// every other such device.
  bool ever_coordinator_dominated = false;
  /// Same test restricted to the final CHs and Masters.
  bool final_coordinator_dominated = false;
  /// Same test over V_2: every device that ever held CH or Master.
  bool v2_dominated = false;
  /// With a single Master: it is long-range adjacent to every device that
  /// ever held CH or Master.
  bool master_covers_ever_ch = false;

  std::uint64_t count(Message m, int rat_index) const {
    return handshakes[static_cast<std::size_t>(m)][static_cast<std::size_t>(rat_index)];
  }
};

void count_handshake(RunMetrics& metrics, Message message, int rat_index);

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  std::uint64_t event_cap = 1'000'000;
  consensus::RuleOptions rules;
};

/// Fixed initial timers for hand-traced scenarios. Orphans still draw fresh
/// timers from the engine's RNG.
struct DeviceTimers {
  double power_on_s;
  double ch_delay_s;
  double m_delay_s;
};

enum class EventKind : std::uint8_t { kPowerOn, kChTimerFire, kMTimerFire, kStartDiscovery, kPoke };

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kPowerOn;
  DeviceId device = 0;
  DeviceId peer = 0;           ///< POKE target
  int rat_index = 0;
  std::uint32_t generation = 0;  ///< timer token
  bool sweep = false;            ///< POKE sent by the post-discovery sweep

  /// Min-heap order on (time, seq).
  friend bool operator>(const Event& a, const Event& b) {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

class Simulator {
 public:
  Simulator(const topology::Deployment& deployment,
            std::span<const topology::RatLinkGraph> graphs, const TimerConfig& timers, Rng rng,
            EngineOptions options = {});

  void set_initial_timers(std::span<const DeviceTimers> timers);

  /// Runs to quiescence; throws NonConvergenceError past the event cap.
  RunMetrics run();

  const consensus::Network& network() const { return network_; }
  bool powered(DeviceId i) const { return powered_[static_cast<std::size_t>(i)]; }

  /// Invalidates pending promotion timers of `i` that a discovery by a device
  /// of `discoverer_role` makes moot: On devices lose their CH timer once a
  /// CH or Master has associated them, UCHs their Master timer once a Master
  /// has.
  void cancel_timers_on_discovery(DeviceId i, consensus::Role discoverer_role);

  bool ch_timer_pending(DeviceId i) const;
  bool m_timer_pending(DeviceId i) const;

 private:
  struct Timers {
    std::uint32_t ch_gen = 0;
    std::uint32_t m_gen = 0;
    bool ch_armed = false;
    bool m_armed = false;
    bool initial_m_used = false;
  };

  void push(Event e);
  void arm_ch_timer(DeviceId i, double delay);
  void arm_m_timer(DeviceId i, double delay);
  double draw_exp(double rate);

  void handle(const Event& e);
  void on_power_on(DeviceId i);
  void on_ch_timer(DeviceId i, std::uint32_t gen);
  void on_m_timer(DeviceId i, std::uint32_t gen);
  void on_discovery(DeviceId i, int rat);
  void on_poke(const Event& e);

  /// Applies a rule outcome produced by a POKE from `initiator`, returning
  /// whether anything changed.
  bool execute(DeviceId initiator, const consensus::RuleOutcome& outcome, int rat);
  void after_change(std::span<const DeviceId> affected, std::span<const consensus::Role> before);
  void schedule_reevaluation(DeviceId a, std::optional<int> only_rat = std::nullopt);
  void learn(DeviceId a, DeviceId b, int rat);
  void mark_role(DeviceId i);
  void finalize(RunMetrics& m) const;

  const topology::Deployment& deployment_;
  std::span<const topology::RatLinkGraph> graphs_;
  TimerConfig timers_;
  Rng rng_;
  EngineOptions options_;

  consensus::Network network_;
  std::vector<char> powered_;
  std::vector<Timers> timer_state_;
  std::vector<std::uint8_t> ever_roles_;  ///< bitmask over Role values
  std::optional<std::vector<DeviceTimers>> initial_timers_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  double last_change_ = 0.0;
  RunMetrics metrics_;
};

/// Convenience wrapper: one run with a fresh simulator.
RunMetrics run(const topology::Deployment& deployment,
               std::span<const topology::RatLinkGraph> graphs, const TimerConfig& timers,
               Rng& rng, const EngineOptions& options = {});

/// True iff no rule would change any device on the given graphs.
bool convergence_check(const consensus::Network& network,
                       std::span<const topology::RatLinkGraph> graphs,
                       const consensus::RuleOptions& options = {});

/// Post-setup structure: every device CM, CH or Master; each CM's head is a
/// CH/Master it shares a short-range link with; each CH's master is a Master
/// it shares a long-range link with; Masters point to themselves. Returns the
/// first violation found.
std::optional<std::string> check_structure(const consensus::Network& network,
                                           std::span<const topology::RatLinkGraph> graphs);

}  // namespace mrmesh::sim
