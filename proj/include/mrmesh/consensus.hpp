// Protocol core: roles, the short- and long-range POKE rule tables, change
// lists with their cascades, and the quiescence predicate. Nothing here knows
// about time or events; the simulation engine drives it.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mrmesh/topology.hpp"

namespace mrmesh::consensus {

/// Declaration order is the hierarchy: CM < CH < Master once set up.
enum class Role : std::uint8_t { On, UnmasteredCM, CM, UnmasteredCH, CH, Master };

std::string_view to_string(Role r);
bool is_head(Role r);    ///< UnmasteredCH, CH or Master
bool is_member(Role r);  ///< UnmasteredCM or CM

inline constexpr int kNumRats = 2;
inline constexpr int kShortRat = 0;  ///< index of RAT 1
inline constexpr int kLongRat = 1;   ///< index of RAT 2

struct DeviceState {
  DeviceId id = 0;
  Role role = Role::On;
  std::optional<DeviceId> cluster_head;
  std::optional<DeviceId> master;
  /// Known open neighborhood per RAT (index 0 = RAT 1), sorted ascending.
  /// Learned through HELLO exchanges; knowledge is symmetric and monotone.
  std::array<std::vector<DeviceId>, kNumRats> known;

  bool knows(int rat_index, DeviceId other) const;
  /// Closed known neighborhood on a RAT: known[rat] + {id}, sorted.
  std::vector<DeviceId> closed_known(int rat_index) const;
  /// Empty when the role/cluster-head/master combination is consistent.
  std::optional<std::string> invariant_violation() const;
};

using Network = std::vector<DeviceState>;  ///< index == device id

Network make_network(std::size_t n);

struct SetRole {
  DeviceId target;
  Role role;
};
struct SetClusterHead {
  DeviceId target;
  DeviceId head;
};
struct SetMaster {
  DeviceId target;
  DeviceId master;
};
using Change = std::variant<SetRole, SetClusterHead, SetMaster>;
using ChangeList = std::vector<Change>;

std::string describe(const Change& change);

/// Rows of the two tables. Values double as stable ids in dumps and tests.
enum class RuleRow : std::uint8_t {
  kNone = 0,
  // short-range RAT
  kUcmOn,
  kCmOn,
  kCmMaster,
  kUchOn,
  kUchUch,
  kUchCh,
  kUchMaster,
  kChOn,
  kChCh,
  kChMaster,
  kMasterAny,
  // long-range RAT
  kUchMasterLong,
  kChMasterSwap,
  kMasterUchLong,
  kMasterChLong,
  kMasterMasterSup,
  kMasterMasterSub,
};

struct RuleOutcome {
  bool matched = false;
  RuleRow row = RuleRow::kNone;
  ChangeList changes;
  std::vector<DeviceId> affected_devices;  ///< targets of `changes`, sorted
};

/// What N_2[.] means in the long-range conditions.
enum class N2View : std::uint8_t {
  /// Each party's closed set of long-range neighbors learned through HELLO
  /// exchanges (stale between exchanges).
  kKnown,
  /// Each party's closed long-range neighborhood within the current
  /// coordinator set (UCH, CH, Master), i.e. the graph G_2 over V_2.
  kCoordinatorGraph,
};

struct RuleOptions {
  N2View n2_view = N2View::kCoordinatorGraph;
  /// Rows (UCH,on)/(UCH,UCH) assign j<-UCH as printed instead of j<-UCM.
  bool literal_rules = false;
  /// Members of a demoted head follow the head's own head instead of
  /// reverting to On.
  bool reparent_orphans = false;
};

RuleOutcome match_rule_short(const DeviceState& i, const DeviceState& j,
                             const RuleOptions& options = {});

RuleOutcome match_rule_long(const DeviceState& i, const DeviceState& j,
                            std::span<const DeviceId> n2_closed_i,
                            std::span<const DeviceId> n2_closed_j);

/// Rule evaluation on the given RAT index with the closed long-range
/// neighborhoods taken from each party's known set.
RuleOutcome match_rule(const DeviceState& i, const DeviceState& j, int rat_index,
                       const RuleOptions& options = {});

/// Closed long-range neighborhood N_2[i] under `options.n2_view`, sorted.
/// `graphs` may be empty for the known view.
std::vector<DeviceId> long_range_closed(const Network& network,
                                        std::span<const topology::RatLinkGraph> graphs,
                                        DeviceId i, const RuleOptions& options);

/// Rule evaluation for devices `i` and `j` of `network`, with N_2[.] per
/// `options.n2_view`.
RuleOutcome match_rule(const Network& network, std::span<const topology::RatLinkGraph> graphs,
                       DeviceId i, DeviceId j, int rat_index, const RuleOptions& options = {});

/// True when applying `outcome.changes` would alter at least one field.
bool is_nontrivial(const RuleOutcome& outcome, const Network& network);

struct ApplyResult {
  std::vector<DeviceId> affected;  ///< every device whose role, c or m changed
  std::vector<DeviceId> orphaned;  ///< members reverted to On
};

/// Applies the assignments in order, then propagates the cascade through the
/// cluster tree (members of demoted heads, CHs of demoted Masters, UCM
/// members of heads that acquired a Master). Throws std::logic_error if the
/// resulting network violates a DeviceState invariant.
ApplyResult apply_changes(Network& network, const ChangeList& changes,
                          const RuleOptions& options = {});

struct Action {
  DeviceId initiator;
  DeviceId target;
  int rat_index;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Ordered pairs adjacent on a RAT, known to each other, whose rule would
/// change at least one field. Empty iff the network is quiescent.
std::vector<Action> enabled_actions(const Network& network,
                                    std::span<const topology::RatLinkGraph> graphs,
                                    const RuleOptions& options = {});

/// Human-readable decision table, one line per row.
std::string rule_table_dump(const RuleOptions& options = {});

}  // namespace mrmesh::consensus
