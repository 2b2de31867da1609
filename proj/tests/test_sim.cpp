#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "csi/error.hpp"
#include "csi/sim.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

double mean_accuracy(const ResponseMatrix& m, const std::vector<Question>& qs) {
    const auto s = score_individuals(m, answer_key(qs));
    return s.distribution.mu;
}

Option modal(const OptionValues& b) {
    return kAllOptions[static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin())];
}

}  // namespace

TEST_CASE("question bank is seeded") {
    const auto a = synthetic_question_bank(36, 42);
    CHECK(a.size() == 36);
    CHECK(a.front().id == "q01");
    CHECK(a == synthetic_question_bank(36, 42));
    CHECK_FALSE(a == synthetic_question_bank(36, 43));
}

TEST_CASE("model config json and validation") {
    SimModelConfig c;
    c.question_seed = 9;
    CHECK(json(c).get<SimModelConfig>() == c);
    CHECK(json::object().get<SimModelConfig>() == SimModelConfig{});
    c.persuasibility_max = 2;
    CHECK_THROWS_AS(validate_model(c), Error);
}

TEST_CASE("calibration hits the target") {
    const auto qs = synthetic_question_bank(36, 42);
    SimModelConfig c;
    c.population = 1000;
    const auto pop = calibrate(c, qs);
    // sampled abilities scatter around the calibrated mean
    CHECK(std::fabs(expected_accuracy(pop, qs) - 0.457) < 0.02);
    const double acc = mean_accuracy(run_individual(pop, qs, 7), qs);
    CHECK(acc >= 0.437);
    CHECK(acc <= 0.477);
}

TEST_CASE("calibration over 100 seeds at n = 35") {
    const auto qs = synthetic_question_bank(36, 42);
    double total = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        SimModelConfig c;
        c.seed = s;
        total += mean_accuracy(run_individual(calibrate(c, qs), qs, derive_seed(s, 1)), qs);
    }
    CHECK(std::fabs(total / 100 - 0.457) <= 0.03);
}

TEST_CASE("calibration edge targets") {
    const auto qs = synthetic_question_bank(12, 1);
    SimModelConfig c;
    c.target_accuracy = 1.0;
    const auto experts = calibrate(c, qs);
    CHECK(mean_accuracy(run_individual(experts, qs, 3), qs) == 1.0);

    c.target_accuracy = 0.10;
    try {
        calibrate(c, qs);
        FAIL("expected TargetBelowChance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TargetBelowChance);
    }
    c.target_accuracy = 1.2;
    CHECK_THROWS_AS(calibrate(c, qs), Error);
}

TEST_CASE("individual runs are deterministic") {
    const auto qs = synthetic_question_bank(10, 2);
    const auto pop = calibrate(SimModelConfig{}, qs);
    CHECK(run_individual(pop, qs, 5) == run_individual(pop, qs, 5));
    CHECK_FALSE(run_individual(pop, qs, 5) == run_individual(pop, qs, 6));
}

TEST_CASE("beliefs stay normalized") {
    const auto qs = synthetic_question_bank(5, 3);
    const auto pop = calibrate(SimModelConfig{}, qs);
    Rng rng(4);
    for (std::size_t i = 0; i < pop.participants.size(); ++i)
        for (const auto& q : qs) {
            auto b = pop.initial_belief(i, q);
            CHECK(std::fabs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0) < 1e-9);
            for (int k = 0; k < 50; ++k) {
                const Option o = kAllOptions[rng.index(8)];
                const double before = b[option_index(o)];
                persuade(b, o, 1.5, rng.uniform(), 24.0);
                CHECK(std::fabs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0) < 1e-9);
                CHECK(b[option_index(o)] >= before);
            }
        }
}

TEST_CASE("csi runs are deterministic") {
    const auto qs = synthetic_question_bank(4, 5);
    const auto pop = calibrate(SimModelConfig{}, qs);
    const auto a = run_csi(pop, qs, SessionConfig{}, 11);
    const auto b = run_csi(pop, qs, SessionConfig{}, 11);
    CHECK(a.event_log == b.event_log);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.messages_posted > 0);
    CHECK(a.relays > 0);
    CHECK_FALSE(run_csi(pop, qs, SessionConfig{}, 12).event_log == a.event_log);
}

TEST_CASE("an expert in a single subgroup of five carries it") {
    const auto qs = synthetic_question_bank(10, 8);
    SimModelConfig c;
    c.population = 5;
    auto pop = calibrate(c, qs);
    pop.participants[0].ability = std::numeric_limits<double>::infinity();
    pop.participants[0].talkativeness = 12.0;
    for (std::size_t i = 1; i < 5; ++i) pop.participants[i].persuasibility = 1.0;

    const auto run = run_csi(pop, qs, SessionConfig{}, 3);
    const auto rep = replay_event_log(EventLog::from_jsonl(run.event_log), LexicalEstimator{});
    REQUIRE(rep.plan.subgroups.size() == 1);
    REQUIRE(rep.questions.size() == qs.size());
    for (const auto& q : rep.questions) {
        const auto& g = q.outcome.sentiment.global;
        const std::size_t last = g.t_ms.size() - 1;
        OptionValues at_close{};
        for (std::size_t o = 0; o < 8; ++o) at_close[o] = g.values[o][last];
        CHECK(modal(at_close) == q.transcript.question.correct_option);
        CHECK(q.outcome.correct);
    }
}

TEST_CASE("without truth bonus or persuasion, csi matches plurality of initial beliefs") {
    const auto qs = synthetic_question_bank(12, 21);
    std::vector<double> csi_acc, plur_acc;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        SimModelConfig c;
        c.seed = s;
        c.truth_quality_bonus = 0;
        c.persuasion_rate = 0;
        const auto pop = calibrate(c, qs);
        csi_acc.push_back(run_csi(pop, qs, SessionConfig{}, derive_seed(s, 3)).accuracy);

        Rng rng(derive_seed(s, 4));
        int hits = 0;
        for (const auto& q : qs) {
            std::vector<Option> votes;
            for (std::size_t i = 0; i < pop.participants.size(); ++i) votes.push_back(modal(pop.initial_belief(i, q)));
            hits += plurality(votes, rng).option == q.correct_option;
        }
        plur_acc.push_back(static_cast<double>(hits) / static_cast<double>(qs.size()));
    }
    const auto st = sign_test(csi_acc, plur_acc);
    MESSAGE("wins " << st.wins << " losses " << st.losses << " ties " << st.ties << " p " << st.p);
    CHECK(st.p > 0.05);
}

TEST_CASE("csi accuracy does not fall as the truth bonus grows") {
    const auto qs = synthetic_question_bank(36, 42);
    double prev = -1;
    for (double bonus : {0.0, 0.25, 0.5, 1.0}) {
        double total = 0;
        for (std::uint64_t s = 1; s <= 50; ++s) {
            SimModelConfig c;
            c.seed = derive_seed(77, s);
            c.question_seed = 42;
            c.truth_quality_bonus = bonus;
            total += run_csi(calibrate(c, qs), qs, SessionConfig{}, derive_seed(s, 3)).accuracy;
        }
        const double mean = total / 50;
        MESSAGE("bonus " << bonus << " mean csi accuracy " << mean);
        CHECK(mean >= prev);
        prev = mean;
    }
}

TEST_CASE("compare: one run is reproducible and complete") {
    ExperimentConfig e;
    e.questions = synthetic_question_bank(8, 1);
    e.n_runs = 2;
    e.woc.reps = 200;
    const auto a = compare(e);
    const auto b = compare(e);
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(a.n_runs == 2);
    CHECK(a.individual.per_run.size() == 2);
    CHECK(a.comparisons.size() == 3);
    CHECK(a.comparison("csi", "woc").sign.wins + a.comparison("csi", "woc").sign.losses +
              a.comparison("csi", "woc").sign.ties ==
          2);
    CHECK(a.csi.iq.has_value());
    const json j = to_json(a);
    CHECK(j.contains("difficulty"));
}

TEST_CASE("hardest half: csi beats individuals on a recorded experiment") {
    ExperimentConfig e;
    e.questions = synthetic_question_bank(36, 42);
    e.n_runs = 5;
    e.woc.reps = 500;
    const auto s = compare(e);
    CHECK(s.difficulty.hardest_count == 18);
    CHECK(s.difficulty.hardest_other_mean > s.difficulty.hardest_individual_mean);
}
