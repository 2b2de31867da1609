#include "csi/partition.hpp"

#include <algorithm>

#include "csi/error.hpp"
#include "csi/rng.hpp"

namespace csi {

namespace {

std::vector<int> spread(int n, int k) {
    std::vector<int> sizes(static_cast<std::size_t>(k), n / k);
    for (int i = 0; i < n % k; ++i) ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

bool within(const std::vector<int>& sizes, const SessionConfig& c) {
    return std::all_of(sizes.begin(), sizes.end(),
                       [&](int s) { return s >= c.subgroup_min && s <= c.subgroup_max; });
}

}  // namespace

std::vector<int> subgroup_sizes(int n, const SessionConfig& c) {
    if (n < c.subgroup_min)
        throw Error(ErrorCode::RosterTooSmall,
                    std::to_string(n) + " participants, minimum is " + std::to_string(c.subgroup_min));
    if (c.subgroup_target <= 0) throw Error(ErrorCode::InvalidArgument, "subgroup_target must be positive");

    if (c.subgroup_count) {
        const int k = *c.subgroup_count;
        if (k < 1 || k > n) throw Error(ErrorCode::PartitionInfeasible, "bad subgroup_count");
        auto sizes = spread(n, k);
        if (!within(sizes, c))
            throw Error(ErrorCode::PartitionInfeasible,
                        std::to_string(n) + " participants cannot form " + std::to_string(k) + " subgroups");
        return sizes;
    }

    const int k = std::max(1, n / c.subgroup_target);
    auto sizes = spread(n, k);
    if (within(sizes, c)) return sizes;
    sizes = spread(n, k + 1);
    if (within(sizes, c)) return sizes;
    throw Error(ErrorCode::PartitionInfeasible,
                std::to_string(n) + " participants do not fit subgroups of " +
                    std::to_string(c.subgroup_min) + ".." + std::to_string(c.subgroup_max));
}

PartitionPlan partition(std::span<const std::string> roster, const SessionConfig& config) {
    const auto sizes = subgroup_sizes(static_cast<int>(roster.size()), config);

    std::vector<std::string> order(roster.begin(), roster.end());
    Rng rng(derive_seed(config.rng_seed, 0x70617274ULL));
    rng.shuffle(order.begin(), order.end());

    PartitionPlan plan;
    plan.seed_used = config.rng_seed;
    auto it = order.begin();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        Subgroup g;
        g.id = static_cast<int>(i) + 1;
        g.member_ids.assign(it, it + sizes[i]);
        g.agent_id = agent_id_for(g.id);
        it += sizes[i];
        plan.subgroups.push_back(std::move(g));
    }
    return plan;
}

void to_json(json& j, const PartitionPlan& p) {
    j = json{{"subgroups", p.subgroups}, {"seed_used", p.seed_used}};
}

void from_json(const json& j, PartitionPlan& p) {
    p.subgroups = j.at("subgroups").get<std::vector<Subgroup>>();
    p.seed_used = j.at("seed_used").get<std::uint64_t>();
}

}  // namespace csi
