#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csi/model.hpp"

namespace csi {

struct PartitionPlan {
    std::vector<Subgroup> subgroups;
    std::uint64_t seed_used = 0;

    bool operator==(const PartitionPlan&) const = default;
};

/// Group sizes for n members: k = floor(n / target) groups (at least one),
/// remainder spread one per group from the front; falls back to k + 1 groups
/// when a size would exceed max. Throws RosterTooSmall / PartitionInfeasible.
std::vector<int> subgroup_sizes(int n, const SessionConfig& config);

/// Seeded shuffle of the roster cut into subgroup_sizes(); subgroup ids are
/// 1-based and each subgroup gets agent "agent-<id>".
PartitionPlan partition(std::span<const std::string> roster, const SessionConfig& config);

void to_json(json& j, const PartitionPlan& p);
void from_json(const json& j, PartitionPlan& p);

}  // namespace csi
