// Independent restatement of the rule tables' firing conditions, shared by
// the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <vector>

#include "mrmesh/consensus.hpp"

namespace mrmesh::testing {

using consensus::Role;
using consensus::RuleRow;
using consensus::kShortRat;
using consensus::kLongRat;
using consensus::long_range_closed;

/// Independent statement of each table row's firing condition, used to check
/// that rows are mutually exclusive and that the matcher picks the right one.
inline std::vector<RuleRow> oracle_rows(const consensus::Network& net,
                                        std::span<const topology::RatLinkGraph> graphs,
                                        DeviceId iid, DeviceId jid, int rat,
                                        const consensus::RuleOptions& opts) {
  const auto& i = net[static_cast<std::size_t>(iid)];
  const auto& j = net[static_cast<std::size_t>(jid)];
  std::vector<RuleRow> rows;
  auto when = [&rows](bool cond, RuleRow r) {
    if (cond) rows.push_back(r);
  };
  const Role ri = i.role, rj = j.role;
  if (rat == kShortRat) {
    const bool head_near_j = i.cluster_head && j.knows(kShortRat, *i.cluster_head);
    when(ri == Role::UnmasteredCM && rj == Role::On && head_near_j, RuleRow::kUcmOn);
    when(ri == Role::CM && rj == Role::On && head_near_j, RuleRow::kCmOn);
    when(ri == Role::CM && rj == Role::Master && i.master == jid, RuleRow::kCmMaster);
    when(ri == Role::UnmasteredCH && rj == Role::On, RuleRow::kUchOn);
    when(ri == Role::UnmasteredCH && rj == Role::UnmasteredCH, RuleRow::kUchUch);
    when(ri == Role::UnmasteredCH && rj == Role::CH, RuleRow::kUchCh);
    when(ri == Role::UnmasteredCH && rj == Role::Master, RuleRow::kUchMaster);
    when(ri == Role::CH && rj == Role::On, RuleRow::kChOn);
    when(ri == Role::CH && rj == Role::CH && i.master == j.master, RuleRow::kChCh);
    when(ri == Role::CH && rj == Role::Master, RuleRow::kChMaster);
    when(ri == Role::Master && !((rj == Role::CM || rj == Role::CH) && j.master != iid),
         RuleRow::kMasterAny);
  } else {
    const auto ni = long_range_closed(net, graphs, iid, opts);
    const auto nj = long_range_closed(net, graphs, jid, opts);
    const std::set<DeviceId> si(ni.begin(), ni.end()), sj(nj.begin(), nj.end());
    auto sub = [](const std::set<DeviceId>& a, const std::set<DeviceId>& b) {
      return std::all_of(a.begin(), a.end(), [&b](DeviceId x) { return b.count(x) > 0; });
    };
    const bool i_sub_j = sub(si, sj), j_sub_i = sub(sj, si);
    const bool i_psub_j = i_sub_j && !j_sub_i, j_psub_i = j_sub_i && !i_sub_j;
    when(ri == Role::UnmasteredCH && rj == Role::Master && i_sub_j, RuleRow::kUchMasterLong);
    when(ri == Role::CH && rj == Role::Master && j_psub_i && i.master == jid,
         RuleRow::kChMasterSwap);
    when(ri == Role::Master && rj == Role::UnmasteredCH && j_sub_i, RuleRow::kMasterUchLong);
    when(ri == Role::Master && rj == Role::CH && i_psub_j && j.master == iid,
         RuleRow::kMasterChLong);
    when(ri == Role::Master && rj == Role::Master && j_sub_i, RuleRow::kMasterMasterSup);
    when(ri == Role::Master && rj == Role::Master && i_psub_j, RuleRow::kMasterMasterSub);
  }
  return rows;
}

}  // namespace mrmesh::testing
