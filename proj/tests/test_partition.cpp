#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "csi/error.hpp"
#include "csi/partition.hpp"
#include "helpers.hpp"

using namespace csi;
using csi::testing::make_config;

namespace {

std::vector<std::string> ids(const SessionConfig& c) {
    std::vector<std::string> out;
    for (const auto& p : c.roster) out.push_back(p.id);
    return out;
}

}  // namespace

TEST_CASE("35 members, target 5 -> seven groups of five") {
    const auto c = make_config(35);
    const auto sizes = subgroup_sizes(35, c);
    CHECK(sizes == std::vector<int>(7, 5));
    const auto plan = partition(ids(c), c);
    REQUIRE(plan.subgroups.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(plan.subgroups[i].id == static_cast<int>(i) + 1);
        CHECK(plan.subgroups[i].agent_id == "agent-" + std::to_string(i + 1));
    }
}

TEST_CASE("remainder goes one per group from the front") {
    const auto c = make_config(37);
    CHECK(subgroup_sizes(37, c) == std::vector<int>{6, 6, 5, 5, 5, 5, 5});
    CHECK(subgroup_sizes(13, make_config(13)) == std::vector<int>{7, 6});
}

TEST_CASE("overflow falls back to one more group") {
    CHECK(subgroup_sizes(14, make_config(14)) == std::vector<int>{7, 7});
    auto c = make_config(20);
    c.subgroup_max = 5;
    c.subgroup_target = 4;
    CHECK(subgroup_sizes(20, c) == std::vector<int>{4, 4, 4, 4, 4});
    c = make_config(9);
    c.subgroup_max = 6;
    CHECK(subgroup_sizes(9, c) == std::vector<int>{5, 4});
}

TEST_CASE("explicit subgroup count") {
    auto c = make_config(245);
    c.subgroup_count = 47;
    const auto sizes = subgroup_sizes(245, c);
    CHECK(sizes.size() == 47);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), 0) == 245);
    CHECK(*std::max_element(sizes.begin(), sizes.end()) == 6);
    CHECK(*std::min_element(sizes.begin(), sizes.end()) == 5);
}

TEST_CASE("too small roster") {
    try {
        subgroup_sizes(3, make_config(3));
        FAIL("expected RosterTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RosterTooSmall);
    }
}

TEST_CASE("partition properties over n in [8, 300]") {
    for (int n = 8; n <= 300; ++n) {
        const auto c = make_config(n, 1, static_cast<std::uint64_t>(n));
        const auto plan = partition(ids(c), c);
        std::set<std::string> seen;
        int lo = 1000, hi = 0;
        for (const auto& g : plan.subgroups) {
            const int s = static_cast<int>(g.member_ids.size());
            lo = std::min(lo, s);
            hi = std::max(hi, s);
            CHECK(s >= c.subgroup_min);
            CHECK(s <= c.subgroup_max);
            for (const auto& m : g.member_ids) CHECK(seen.insert(m).second);
        }
        CHECK(seen.size() == static_cast<std::size_t>(n));
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("partition is a seeded shuffle") {
    const auto c = make_config(35, 1, 7);
    const auto a = partition(ids(c), c);
    CHECK(partition(ids(c), c) == a);
    auto c2 = c;
    c2.rng_seed = 8;
    CHECK_FALSE(partition(ids(c2), c2) == a);
    CHECK(json(a).get<PartitionPlan>() == a);
}
