#include "mrmesh/consensus.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace mrmesh::consensus {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::On: return "on";
    case Role::UnmasteredCM: return "UCM";
    case Role::CM: return "CM";
    case Role::UnmasteredCH: return "UCH";
    case Role::CH: return "CH";
    case Role::Master: return "Master";
  }
  return "?";
}

bool is_head(Role r) {
  return r == Role::UnmasteredCH || r == Role::CH || r == Role::Master;
}

bool is_member(Role r) { return r == Role::UnmasteredCM || r == Role::CM; }

bool DeviceState::knows(int rat_index, DeviceId other) const {
  const auto& v = known[static_cast<std::size_t>(rat_index)];
  return std::binary_search(v.begin(), v.end(), other);
}

std::vector<DeviceId> DeviceState::closed_known(int rat_index) const {
  std::vector<DeviceId> out = known[static_cast<std::size_t>(rat_index)];
  out.insert(std::lower_bound(out.begin(), out.end(), id), id);
  return out;
}

std::optional<std::string> DeviceState::invariant_violation() const {
  auto fail = [this](const char* what) {
    std::ostringstream os;
    os << "device " << id << " (" << to_string(role) << "): " << what;
    return std::optional<std::string>(os.str());
  };
  switch (role) {
    case Role::On:
      if (cluster_head || master) return fail("powered-on device has c or m set");
      break;
    case Role::UnmasteredCM:
      if (!cluster_head) return fail("member without cluster head");
      if (master) return fail("unmastered member has a master");
      break;
    case Role::CM:
      if (!cluster_head) return fail("member without cluster head");
      if (!master) return fail("member without master");
      break;
    case Role::UnmasteredCH:
      if (master) return fail("unmastered CH has a master");
      break;
    case Role::CH:
      if (!master) return fail("CH without master");
      break;
    case Role::Master:
      if (master != id || cluster_head != id) return fail("Master must have m = c = self");
      break;
  }
  if (role != Role::Master && (master == id)) return fail("non-Master is its own master");
  return std::nullopt;
}

Network make_network(std::size_t n) {
  Network net(n);
  for (std::size_t i = 0; i < n; ++i) net[i].id = static_cast<DeviceId>(i);
  return net;
}

std::string describe(const Change& change) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetRole>) {
          os << c.target << "<-" << to_string(c.role);
        } else if constexpr (std::is_same_v<T, SetClusterHead>) {
          os << "c(" << c.target << ")<-" << c.head;
        } else {
          os << "m(" << c.target << ")<-" << c.master;
        }
      },
      change);
  return os.str();
}

namespace {

DeviceId target_of(const Change& change) {
  return std::visit([](const auto& c) { return c.target; }, change);
}

RuleOutcome fire(RuleRow row, ChangeList changes) {
  RuleOutcome out;
  out.matched = true;
  out.row = row;
  out.changes = std::move(changes);
  for (const auto& c : out.changes) out.affected_devices.push_back(target_of(c));
  std::sort(out.affected_devices.begin(), out.affected_devices.end());
  out.affected_devices.erase(
      std::unique(out.affected_devices.begin(), out.affected_devices.end()),
      out.affected_devices.end());
  return out;
}

bool subset(std::span<const DeviceId> a, std::span<const DeviceId> b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool proper_subset(std::span<const DeviceId> a, std::span<const DeviceId> b) {
  return a.size() < b.size() && subset(a, b);
}

}  // namespace

RuleOutcome match_rule_short(const DeviceState& i, const DeviceState& j,
                             const RuleOptions& options) {
  const Role unassociated = options.literal_rules ? Role::UnmasteredCH : Role::UnmasteredCM;
  switch (i.role) {
    case Role::UnmasteredCM:
      // j joins i's cluster head, provided that head is a neighbor of j.
      if (j.role == Role::On && i.cluster_head && j.knows(kShortRat, *i.cluster_head)) {
        return fire(RuleRow::kUcmOn,
                    {SetRole{j.id, Role::UnmasteredCM}, SetClusterHead{j.id, *i.cluster_head}});
      }
      break;
    case Role::CM:
      if (j.role == Role::On && i.cluster_head && j.knows(kShortRat, *i.cluster_head)) {
        return fire(RuleRow::kCmOn, {SetRole{j.id, Role::CM},
                                     SetClusterHead{j.id, *i.cluster_head},
                                     SetMaster{j.id, *i.master}});
      }
      // A member moves directly under its own Master.
      if (j.role == Role::Master && i.master == j.id) {
        return fire(RuleRow::kCmMaster, {SetClusterHead{i.id, j.id}, SetMaster{i.id, j.id}});
      }
      break;
    case Role::UnmasteredCH:
      if (j.role == Role::On) {
        return fire(RuleRow::kUchOn, {SetRole{j.id, unassociated}, SetClusterHead{j.id, i.id}});
      }
      if (j.role == Role::UnmasteredCH) {
        return fire(RuleRow::kUchUch,
                    {SetRole{j.id, unassociated}, SetClusterHead{j.id, i.id}});
      }
      if (j.role == Role::CH) {
        return fire(RuleRow::kUchCh,
                    {SetRole{i.id, Role::CM}, SetClusterHead{i.id, j.id}, SetMaster{i.id, *j.master}});
      }
      if (j.role == Role::Master) {
        return fire(RuleRow::kUchMaster,
                    {SetRole{i.id, Role::CM}, SetClusterHead{i.id, j.id}, SetMaster{i.id, j.id}});
      }
      break;
    case Role::CH:
      if (j.role == Role::On) {
        return fire(RuleRow::kChOn,
                    {SetRole{j.id, Role::CM}, SetClusterHead{j.id, i.id}, SetMaster{j.id, *i.master}});
      }
      if (j.role == Role::CH && i.master == j.master) {
        return fire(RuleRow::kChCh, {SetRole{j.id, Role::CM}, SetClusterHead{j.id, i.id}});
      }
      if (j.role == Role::Master) {
        return fire(RuleRow::kChMaster,
                    {SetRole{i.id, Role::CM}, SetClusterHead{i.id, j.id}, SetMaster{i.id, j.id}});
      }
      break;
    case Role::Master: {
      // Devices already under another Master are left alone; other Masters
      // are absorbed.
      const bool foreign = (j.role == Role::CM || j.role == Role::CH) && j.master != i.id;
      if (!foreign) {
        return fire(RuleRow::kMasterAny,
                    {SetRole{j.id, Role::CM}, SetClusterHead{j.id, i.id}, SetMaster{j.id, i.id}});
      }
      break;
    }
    case Role::On:
      break;
  }
  return {};
}

RuleOutcome match_rule_long(const DeviceState& i, const DeviceState& j,
                            std::span<const DeviceId> n2_closed_i,
                            std::span<const DeviceId> n2_closed_j) {
  const auto& ni = n2_closed_i;
  const auto& nj = n2_closed_j;
  if (i.role == Role::UnmasteredCH && j.role == Role::Master) {
    if (subset(ni, nj)) {
      return fire(RuleRow::kUchMasterLong,
                  {SetRole{i.id, Role::CH}, SetClusterHead{i.id, j.id}, SetMaster{i.id, j.id}});
    }
  } else if (i.role == Role::CH && j.role == Role::Master) {
    if (proper_subset(nj, ni) && i.master == j.id) {
      return fire(RuleRow::kChMasterSwap,
                  {SetRole{i.id, Role::Master}, SetClusterHead{i.id, i.id}, SetMaster{i.id, i.id},
                   SetRole{j.id, Role::CH}, SetClusterHead{j.id, j.id}, SetMaster{j.id, i.id}});
    }
  } else if (i.role == Role::Master && j.role == Role::UnmasteredCH) {
    if (subset(nj, ni)) {
      return fire(RuleRow::kMasterUchLong,
                  {SetRole{j.id, Role::CH}, SetClusterHead{j.id, j.id}, SetMaster{j.id, i.id}});
    }
  } else if (i.role == Role::Master && j.role == Role::CH) {
    if (proper_subset(ni, nj) && j.master == i.id) {
      return fire(RuleRow::kMasterChLong, {SetRole{j.id, Role::CH}, SetMaster{j.id, i.id}});
    }
  } else if (i.role == Role::Master && j.role == Role::Master) {
    if (subset(nj, ni)) {
      return fire(RuleRow::kMasterMasterSup,
                  {SetRole{j.id, Role::CH}, SetClusterHead{j.id, j.id}, SetMaster{j.id, i.id}});
    }
    if (proper_subset(ni, nj)) {
      return fire(RuleRow::kMasterMasterSub,
                  {SetRole{i.id, Role::CH}, SetClusterHead{i.id, i.id}, SetMaster{i.id, j.id}});
    }
  }
  return {};
}

RuleOutcome match_rule(const DeviceState& i, const DeviceState& j, int rat_index,
                       const RuleOptions& options) {
  if (rat_index == kShortRat) return match_rule_short(i, j, options);
  const auto ni = i.closed_known(kLongRat);
  const auto nj = j.closed_known(kLongRat);
  return match_rule_long(i, j, ni, nj);
}

std::vector<DeviceId> long_range_closed(const Network& network,
                                        std::span<const topology::RatLinkGraph> graphs,
                                        DeviceId i, const RuleOptions& options) {
  const auto& d = network.at(static_cast<std::size_t>(i));
  if (options.n2_view == N2View::kKnown) return d.closed_known(kLongRat);
  if (graphs.size() <= static_cast<std::size_t>(kLongRat)) {
    throw std::invalid_argument("coordinator-graph view needs the long-range link graph");
  }
  std::vector<DeviceId> out{i};
  for (DeviceId k : graphs[kLongRat].neighbors(i)) {
    if (is_head(network[static_cast<std::size_t>(k)].role)) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

RuleOutcome match_rule(const Network& network, std::span<const topology::RatLinkGraph> graphs,
                       DeviceId i, DeviceId j, int rat_index, const RuleOptions& options) {
  const auto& di = network.at(static_cast<std::size_t>(i));
  const auto& dj = network.at(static_cast<std::size_t>(j));
  if (rat_index == kShortRat) return match_rule_short(di, dj, options);
  const auto ni = long_range_closed(network, graphs, i, options);
  const auto nj = long_range_closed(network, graphs, j, options);
  return match_rule_long(di, dj, ni, nj);
}

namespace {

using Fields = std::tuple<Role, std::optional<DeviceId>, std::optional<DeviceId>>;

Fields fields_of(const DeviceState& d) { return {d.role, d.cluster_head, d.master}; }

void assign(DeviceState& d, const Change& change) {
  std::visit(
      [&d](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetRole>) {
          d.role = c.role;
        } else if constexpr (std::is_same_v<T, SetClusterHead>) {
          d.cluster_head = c.head;
        } else {
          d.master = c.master;
        }
      },
      change);
}

DeviceState& at(Network& network, DeviceId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= network.size()) {
    throw std::out_of_range("change references unknown device " + std::to_string(id));
  }
  return network[static_cast<std::size_t>(id)];
}

void orphan(DeviceState& d) {
  d.role = Role::On;
  d.cluster_head.reset();
  d.master.reset();
}

// One normalization pass over the cluster tree; returns whether anything moved.
bool normalize_pass(Network& network, const RuleOptions& options) {
  bool moved = false;
  auto set = [&moved](auto& field, const auto& value) {
    if (field != value) {
      field = value;
      moved = true;
    }
  };
  for (auto& y : network) {
    if (y.role == Role::CH) {
      const DeviceState& m = network[static_cast<std::size_t>(*y.master)];
      if (m.role == Role::Master) continue;
      if (m.role == Role::CH && m.master && *m.master != y.id) {
        // Master absorbed by another Master: follow it.
        set(y.master, m.master);
      } else {
        set(y.role, Role::UnmasteredCH);
        set(y.master, std::optional<DeviceId>{});
      }
    } else if (is_member(y.role)) {
      const DeviceId hid = *y.cluster_head;
      const DeviceState& h = network[static_cast<std::size_t>(hid)];
      if (hid == y.id || !is_head(h.role)) {
        if (options.reparent_orphans && hid != y.id && is_member(h.role) && h.cluster_head &&
            *h.cluster_head != y.id) {
          set(y.cluster_head, h.cluster_head);
        } else {
          orphan(y);
          moved = true;
        }
      } else if (h.role == Role::UnmasteredCH) {
        set(y.role, Role::UnmasteredCM);
        set(y.master, std::optional<DeviceId>{});
      } else {
        const DeviceId mid = h.role == Role::Master ? h.id : *h.master;
        set(y.role, Role::CM);
        set(y.master, std::optional<DeviceId>{mid});
      }
    }
  }
  return moved;
}

}  // namespace

bool is_nontrivial(const RuleOutcome& outcome, const Network& network) {
  if (!outcome.matched) return false;
  for (DeviceId t : outcome.affected_devices) {
    DeviceState copy = network.at(static_cast<std::size_t>(t));
    const auto before = fields_of(copy);
    for (const auto& c : outcome.changes) {
      if (target_of(c) == t) assign(copy, c);
    }
    if (fields_of(copy) != before) return true;
  }
  return false;
}

ApplyResult apply_changes(Network& network, const ChangeList& changes,
                          const RuleOptions& options) {
  ApplyResult result;
  if (changes.empty()) return result;

  std::vector<Fields> before;
  before.reserve(network.size());
  for (const auto& d : network) before.push_back(fields_of(d));

  for (const auto& c : changes) assign(at(network, target_of(c)), c);
  for (DeviceId t = 0; static_cast<std::size_t>(t) < network.size(); ++t) {
    if (auto err = network[static_cast<std::size_t>(t)].invariant_violation()) {
      throw std::logic_error("change list violates invariants: " + *err);
    }
  }

  std::size_t passes = 0;
  while (normalize_pass(network, options)) {
    if (++passes > network.size() + 2) {
      throw std::logic_error("cluster tree cascade did not settle");
    }
  }

  for (std::size_t k = 0; k < network.size(); ++k) {
    const auto& d = network[k];
    if (auto err = d.invariant_violation()) {
      throw std::logic_error("cascade violates invariants: " + *err);
    }
    if (fields_of(d) != before[k]) {
      result.affected.push_back(d.id);
      if (d.role == Role::On && std::get<0>(before[k]) != Role::On) {
        result.orphaned.push_back(d.id);
      }
    }
  }
  return result;
}

std::vector<Action> enabled_actions(const Network& network,
                                    std::span<const topology::RatLinkGraph> graphs,
                                    const RuleOptions& options) {
  std::vector<Action> out;
  for (int r = 0; r < kNumRats; ++r) {
    const topology::RatLinkGraph* g =
        static_cast<std::size_t>(r) < graphs.size() ? &graphs[static_cast<std::size_t>(r)] : nullptr;
    for (const auto& i : network) {
      for (DeviceId jid : i.known[static_cast<std::size_t>(r)]) {
        if (g && !g->adjacent(i.id, jid)) continue;
        const auto outcome = match_rule(network, graphs, i.id, jid, r, options);
        if (is_nontrivial(outcome, network)) out.push_back({i.id, jid, r});
      }
    }
  }
  return out;
}

std::string rule_table_dump(const RuleOptions& options) {
  const char* unassociated = options.literal_rules ? "UCH" : "UCM";
  std::ostringstream os;
  os << "rat | i      | j      | condition                          | changes\n";
  os << "1   | UCM    | on     | c(i) in N_1(j)                     | j<-UCM, c(j)<-c(i)\n";
  os << "1   | CM     | on     | c(i) in N_1(j)                     | j<-CM, c(j)<-c(i), m(j)<-m(i)\n";
  os << "1   | CM     | Master | m(i)==j                            | c(i)<-j, m(i)<-j\n";
  os << "1   | UCH    | on     | -                                  | j<-" << unassociated
     << ", c(j)<-i\n";
  os << "1   | UCH    | UCH    | -                                  | j<-" << unassociated
     << ", c(j)<-i\n";
  os << "1   | UCH    | CH     | -                                  | i<-CM, c(i)<-j, m(i)<-m(j)\n";
  os << "1   | UCH    | Master | -                                  | i<-CM, c(i)<-j, m(i)<-j\n";
  os << "1   | CH     | on     | -                                  | j<-CM, c(j)<-i, m(j)<-m(i)\n";
  os << "1   | CH     | CH     | m(i)==m(j)                         | j<-CM, c(j)<-i\n";
  os << "1   | CH     | Master | -                                  | i<-CM, c(i)<-j, m(i)<-j\n";
  os << "1   | Master | any    | j not under another Master         | j<-CM, c(j)<-i, m(j)<-i\n";
  os << "2   | UCH    | Master | N_2[i] subseteq N_2[j]             | i<-CH, c(i)<-j, m(i)<-j\n";
  os << "2   | CH     | Master | N_2[i] supset N_2[j], m(i)==j      | i<-Master, j<-CH, m(j)<-i\n";
  os << "2   | Master | UCH    | N_2[i] supseteq N_2[j]             | j<-CH, c(j)<-j, m(j)<-i\n";
  os << "2   | Master | CH     | N_2[i] subset N_2[j], m(j)==i      | j<-CH, m(j)<-i\n";
  os << "2   | Master | Master | N_2[i] supseteq N_2[j]             | j<-CH, c(j)<-j, m(j)<-i\n";
  os << "2   | Master | Master | N_2[i] subset N_2[j]               | i<-CH, c(i)<-i, m(i)<-j\n";
  return os.str();
}

}  // namespace mrmesh::consensus
