#include <doctest.h>

#include <cmath>
#include <map>

#include "csi/conviction.hpp"
#include "csi/error.hpp"
#include "csi/rng.hpp"

using namespace csi;

namespace {

std::map<Option, double> lex(const std::string& text) {
    Message m{1, 1, "u1", text, 0, std::nullopt};
    std::map<Option, double> out;
    for (const auto& e : LexicalEstimator{}.estimate(m, kAllOptions)) out[e.option] = e.strength;
    return out;
}

// Direct sum, written out independently of the accumulator.
double oracle(const std::vector<ConvictionEvent>& evs, std::optional<int> sg, Option o, std::int64_t t,
              double half_life_s) {
    double v = 0;
    for (const auto& e : evs) {
        if (e.option != o || e.t_ms > t) continue;
        if (sg && e.subgroup_id != *sg) continue;
        v += e.strength * std::pow(2.0, -static_cast<double>(t - e.t_ms) / (half_life_s * 1000.0));
    }
    return v;
}

}  // namespace

TEST_CASE("lexical cues") {
    CHECK(lex("I vote B") == std::map<Option, double>{{Option::B, 1.0}});
    CHECK(lex("vote for H obviously") == std::map<Option, double>{{Option::H, 1.0}});
    CHECK(lex("the answer is C") == std::map<Option, double>{{Option::C, 1.0}});
    CHECK(lex("maybe D") == std::map<Option, double>{{Option::D, 0.4}});
    CHECK(lex("it could be E") == std::map<Option, double>{{Option::E, 0.4}});
    CHECK(lex("definitely not F") == std::map<Option, double>{{Option::F, -1.0}});
    CHECK(lex("Another group thinks G: because") == std::map<Option, double>{{Option::G, 1.0}});
    CHECK(lex("I vote A, not B") == std::map<Option, double>{{Option::A, 1.0}, {Option::B, -1.0}});
}

TEST_CASE("lexical: strongest cue per option, negative wins ties") {
    CHECK(lex("maybe B, I vote B") == std::map<Option, double>{{Option::B, 1.0}});
    CHECK(lex("I vote C. no wait, not C") == std::map<Option, double>{{Option::C, -1.0}});
}

TEST_CASE("lexical: no cue, no event") {
    CHECK(lex("A picture of a cat").empty());
    CHECK(lex("i vote b").empty());
    CHECK(lex("vote BC").empty());
    CHECK(lex("").empty());
}

TEST_CASE("half-life decay") {
    SentimentAccumulator acc(60.0, 240000, {1});
    acc.add({1, Option::B, 1.0, 0, 1});
    CHECK(acc.subgroup_values(1, 0)[1] == doctest::Approx(1.0));
    CHECK(acc.subgroup_values(1, 60000)[1] == doctest::Approx(0.5));
    CHECK(acc.subgroup_values(1, 120000)[1] == doctest::Approx(0.25));
}

TEST_CASE("accumulator matches the direct sum") {
    Rng rng(5);
    std::vector<ConvictionEvent> evs;
    std::int64_t t = 0;
    for (int i = 0; i < 300; ++i) {
        t += static_cast<std::int64_t>(rng.index(900));
        evs.push_back({1 + static_cast<int>(rng.index(4)), kAllOptions[rng.index(8)], rng.uniform() * 2 - 1, t,
                       static_cast<std::uint64_t>(i + 1)});
    }
    const std::int64_t deadline = t + 5000;
    SentimentAccumulator acc(30.0, deadline, {1, 2, 3, 4});
    for (const auto& e : evs) acc.add(e);
    for (std::int64_t q : {std::int64_t{0}, t / 3, t / 2, t, deadline}) {
        const auto g = acc.global_values(q);
        for (Option o : kAllOptions) {
            CHECK(g[option_index(o)] == doctest::Approx(oracle(evs, std::nullopt, o, q, 30.0)).epsilon(1e-9));
            for (int sg = 1; sg <= 4; ++sg)
                CHECK(acc.subgroup_values(sg, q)[option_index(o)] ==
                      doctest::Approx(oracle(evs, sg, o, q, 30.0)).epsilon(1e-9));
        }
    }
    const auto set = acc.series(deadline);
    CHECK(set.subgroups.size() == 4);
    CHECK(set.global.t_ms.front() == 0);
    CHECK(set.global.t_ms.back() == deadline);
    for (std::size_t k = 0; k < set.global.t_ms.size(); ++k)
        CHECK(set.global.values[2][k] == acc.global_values(set.global.t_ms[k])[2]);
    CHECK(accumulate(evs, 30.0, deadline, {1, 2, 3, 4}) == set);
}

TEST_CASE("accumulator rejects late and out-of-order events") {
    SentimentAccumulator acc(60.0, 1000, {1});
    acc.add({1, Option::A, 1.0, 500, 1});
    try {
        acc.add({1, Option::A, 1.0, 400, 2});
        FAIL("expected InvalidArgument");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
    try {
        acc.add({1, Option::A, 1.0, 1001, 3});
        FAIL("expected LateEvent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LateEvent);
    }
    CHECK_THROWS_AS(acc.add({1, Option::A, NAN, 600, 4}), Error);
}

TEST_CASE("final answer") {
    SentimentSeries s;
    s.t_ms = {0, 1000, 2000};
    for (auto& v : s.values) v = {0, 0, 0};
    SUBCASE("all zero") {
        const auto a = final_answer(s, 2000);
        CHECK(a.option == Option::A);
        CHECK(a.no_signal);
    }
    SUBCASE("plain argmax at the last sample before the deadline") {
        s.values[3] = {0, 2, 0.1};
        s.values[4] = {0, 1, 0.5};
        CHECK(final_answer(s, 1500).option == Option::D);
        const auto a = final_answer(s, 2000);
        CHECK(a.option == Option::E);
        CHECK_FALSE(a.tie_broken);
        CHECK(a.value_at_deadline == 0.5);
    }
    SUBCASE("tie goes to the option that got there first") {
        s.values[1] = {0, 0, 1};
        s.values[6] = {0, 1, 1};
        const auto a = final_answer(s, 2000);
        CHECK(a.option == Option::G);
        CHECK(a.tie_broken);
    }
    SUBCASE("simultaneous tie goes to the lowest label") {
        s.values[5] = {0, 1, 1};
        s.values[2] = {0, 1, 1};
        CHECK(final_answer(s, 2000).option == Option::C);
    }
    SUBCASE("no series") {
        CHECK_THROWS_AS(final_answer(SentimentSeries{}, 100), Error);
        s.t_ms = {10, 20, 30};
        CHECK_THROWS_AS(final_answer(s, 5), Error);
    }
}

TEST_CASE("series export shape") {
    SentimentAccumulator acc(60.0, 3000, {1, 2});
    acc.add({2, Option::H, 1.0, 100, 1});
    const auto j = export_series(acc.series(3000));
    CHECK(j.size() == 24);
    CHECK(j[0].at("scope") == "GLOBAL");
    CHECK(j[7].at("option") == "H");
    CHECK(j[7].at("samples").size() == 4);
    CHECK(j[7].at("samples")[1][0] == 1000);
    CHECK(j[8].at("scope") == 1);
}
