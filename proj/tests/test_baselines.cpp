#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <functional>

#include "csi/baselines.hpp"
#include "csi/error.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

// Random matrix with some blanks; returns the matrix plus the oracle's view of it.
struct Instance {
    ResponseMatrix m;
    AnswerKey key;
    std::vector<std::vector<int>> votes;  // [question][respondent]
    std::vector<int> correct;
};

Instance random_instance(std::uint64_t seed, std::size_t nr, std::size_t nq, int labels) {
    Rng rng(seed);
    Instance in;
    for (std::size_t r = 0; r < nr; ++r) {
        in.m.respondents.push_back("r" + std::to_string(r));
        in.m.elapsed_s.push_back(600.0);
        in.m.choice.emplace_back();
    }
    for (std::size_t q = 0; q < nq; ++q) {
        const std::string id = "q" + std::to_string(q);
        in.m.questions.push_back(id);
        const int key = static_cast<int>(rng.index(static_cast<std::size_t>(labels)));
        in.key[id] = kAllOptions[static_cast<std::size_t>(key)];
        in.correct.push_back(key);
        in.votes.emplace_back();
        for (std::size_t r = 0; r < nr; ++r) {
            const bool blank = rng.index(8) == 0;
            const int v = blank ? -1 : static_cast<int>(rng.index(static_cast<std::size_t>(labels)));
            in.votes.back().push_back(v);
            in.m.choice[r].push_back(blank ? std::nullopt : std::optional<Option>(kAllOptions[static_cast<std::size_t>(v)]));
        }
    }
    return in;
}

}  // namespace

TEST_CASE("IQ golden values") {
    const ScoreDistribution ref{0.457, 0.186, 35};
    CHECK(iq_score(0.805, ref) == doctest::Approx(128.0645).epsilon(1e-6));
    CHECK(iq_score(0.641, ref) == doctest::Approx(114.8387).epsilon(1e-6));
    CHECK(iq_score(0.457, ref) == 100.0);
    CHECK(code_of([] { iq_score(0.5, {0.5, 0.0, 3}); }) == ErrorCode::DegenerateDistribution);
}

TEST_CASE("IQ is affine in the raw score") {
    const ScoreDistribution ref{0.4, 0.2, 10};
    for (double x : {0.0, 0.1, 0.33, 0.9})
        CHECK(iq_score(x + 0.1, ref) - iq_score(x, ref) == doctest::Approx(7.5));
}

TEST_CASE("percentile golden values") {
    CHECK(percentile(100) == 50.0);
    CHECK(percentile(128) >= 96.5);
    CHECK(percentile(128) <= 97.5);
    CHECK(percentile(115) >= 83.5);
    CHECK(percentile(115) <= 84.5);
    CHECK(percentile(70) == doctest::Approx(100 - percentile(130)));
}

TEST_CASE("csv round trip and validation") {
    const std::string text = "respondent,elapsed_s,q1,q2\nr1,300,A,\nr2,,H,C\n";
    const auto m = parse_response_csv(text);
    CHECK(m.respondents == std::vector<std::string>{"r1", "r2"});
    CHECK(m.choice[0][1] == std::nullopt);
    CHECK(m.elapsed_s[1] == std::nullopt);
    CHECK(m.choice[1][0] == Option::H);
    CHECK(parse_response_csv(to_csv(m)) == m);
    CHECK(code_of([] { parse_response_csv("name,q1\nx,A\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_response_csv("respondent,elapsed_s,q1\nx,1\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_response_csv("respondent,elapsed_s,q1\nx,1,Q\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("answer keys") {
    CHECK(parse_answer_key(json{{"q1", "B"}}) == AnswerKey{{"q1", Option::B}});
    Question q;
    q.id = "z";
    q.correct_option = Option::G;
    CHECK(parse_answer_key(question_bank_json({q})) == AnswerKey{{"z", Option::G}});
    CHECK(answer_key({q}) == AnswerKey{{"z", Option::G}});
}

TEST_CASE("bad actor filter") {
    const auto m = parse_response_csv(
        "respondent,elapsed_s,q1,q2,q3\n"
        "fast,60,A,B,C\n"
        "same,500,D,D,D\n"
        "ok,500,D,D,E\n"
        "one,500,A,,\n");
    const auto f = filter_bad_actors(m);
    CHECK(f.flagged == std::vector<std::string>{"fast", "same"});
    CHECK(f.clean.respondents == std::vector<std::string>{"ok", "one"});
}

TEST_CASE("individual scores") {
    const auto m = parse_response_csv(
        "respondent,elapsed_s,q1,q2\n"
        "a,1,A,B\n"
        "b,1,A,\n"
        "c,1,C,C\n");
    const AnswerKey key{{"q1", Option::A}, {"q2", Option::B}};
    const auto s = score_individuals(m, key);
    CHECK(s.fraction_correct == std::vector<double>{1.0, 0.5, 0.0});
    CHECK(s.distribution.mu == doctest::Approx(0.5));
    CHECK(s.distribution.sigma == doctest::Approx(std::sqrt(1.0 / 6.0)));
    CHECK(s.incomplete_respondents == 1);
    CHECK(score_individuals(m, key, Deviation::sample).distribution.sigma == doctest::Approx(0.5));
    CHECK(per_question_accuracy(m, key) == std::map<std::string, double>{{"q1", 2.0 / 3}, {"q2", 1.0 / 3}});
    CHECK(code_of([&] { score_individuals(m, AnswerKey{{"q1", Option::A}}); }) == ErrorCode::QuestionNotFound);
}

TEST_CASE("plurality") {
    Rng rng(1);
    const std::vector<Option> clear{Option::B, Option::C, Option::B};
    const auto r = plurality(clear, rng);
    CHECK(r.option == Option::B);
    CHECK_FALSE(r.tie);

    const std::vector<Option> tied{Option::B, Option::C, Option::C, Option::B, Option::H};
    int b = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto t = plurality(tied, rng);
        CHECK(t.tie);
        CHECK((t.option == Option::B || t.option == Option::C));
        b += t.option == Option::B;
    }
    CHECK(b == doctest::Approx(2000).epsilon(0.06));
    CHECK(code_of([&] { plurality(std::vector<Option>{}, rng); }) == ErrorCode::NoVotes);
}

TEST_CASE("bootstrap agrees with exhaustive enumeration (2 groups of 2)") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto in = random_instance(seed, 2 + seed % 4, 1 + seed % 3, 3);
        const auto exact = oracle::woc_exact(in.votes, in.m.size(), in.correct, 2, 2, 2);
        WocParams p{2, 2, 2, 10000, seed};
        const auto got = woc_bootstrap(in.m, in.key, p);
        CHECK(std::fabs(got.overall - exact.overall) <= 0.02);
        for (std::size_t q = 0; q < exact.per_question.size(); ++q)
            CHECK(std::fabs(got.per_question_accuracy[q] - exact.per_question[q]) <= 0.02);
        CHECK(std::fabs(got.group_tie_rate - exact.group_tie) <= 0.02);
        CHECK(std::fabs(got.population_tie_rate - exact.population_tie) <= 0.02);
    }
}

TEST_CASE("bootstrap agrees with exhaustive enumeration (6 groups of 5-6)") {
    const auto in = random_instance(99, 4, 2, 8);
    const auto exact = oracle::woc_exact(in.votes, in.m.size(), in.correct, 6, 5, 6);
    const auto got = woc_bootstrap(in.m, in.key, WocParams{6, 5, 6, 10000, 3});
    CHECK(std::fabs(got.overall - exact.overall) <= 0.02);
    CHECK(std::fabs(got.group_tie_rate - exact.group_tie) <= 0.02);
}

TEST_CASE("bootstrap reps are schedule independent") {
    const auto in = random_instance(5, 30, 10, 8);
    const auto full = woc_bootstrap(in.m, in.key, WocParams{6, 5, 6, 400, 11});
    const auto prefix = woc_bootstrap(in.m, in.key, WocParams{6, 5, 6, 150, 11});
    for (std::size_t r = 0; r < 150; ++r) CHECK(full.rep_accuracy[r] == prefix.rep_accuracy[r]);

    // two halves of independent seeds agree within sampling noise
    const auto a = woc_bootstrap(in.m, in.key, WocParams{6, 5, 6, 2000, 100});
    const auto b = woc_bootstrap(in.m, in.key, WocParams{6, 5, 6, 2000, 200});
    const double se = std::hypot(a.overall_stderr, b.overall_stderr);
    CHECK(std::fabs(a.overall - b.overall) < 3 * se);
}

TEST_CASE("incomplete beta against boost") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const double a = 0.2 + rng.uniform() * 40, b = 0.2 + rng.uniform() * 40, x = rng.uniform();
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-9));
    }
    CHECK(incomplete_beta(2, 3, 0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1) == 1.0);
}

TEST_CASE("paired t-test against the oracle") {
    const std::vector<double> a{1, 1, 0}, b{1, 0, 0};
    const auto small = paired_t_test(a, b);
    CHECK(small.t == doctest::Approx(1.0));
    CHECK(small.p == doctest::Approx(0.42265).epsilon(1e-4));
    CHECK(small.df == 2);

    Rng rng(23);
    for (int f = 0; f < 20; ++f) {
        const std::size_t n = 3 + rng.index(60);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform() + (rng.uniform() - 0.5) * 0.3;
        }
        const auto got = paired_t_test(x, y);
        const auto want = oracle::paired_t(x, y);
        CHECK(std::fabs(got.t - want.t) <= 1e-6);
        CHECK(std::fabs(got.p - want.p) <= 1e-4);
    }
}

TEST_CASE("paired t-test edge cases") {
    const std::vector<double> a{1, 2, 3}, same{1, 2, 3}, shifted{0, 1, 2}, short_a{1};
    CHECK(code_of([&] { paired_t_test(a, same); }) == ErrorCode::DegeneratePairs);
    CHECK(code_of([&] { paired_t_test(short_a, short_a); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { paired_t_test(a, short_a); }) == ErrorCode::InvalidArgument);
    const auto r = paired_t_test(a, shifted);
    CHECK(std::isinf(r.t));
    CHECK(r.p == 0.0);
}

TEST_CASE("sign test against the binomial oracle") {
    Rng rng(31);
    for (int f = 0; f < 30; ++f) {
        const std::size_t n = 1 + rng.index(80);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng.index(4));
            y[i] = static_cast<double>(rng.index(4));
        }
        const auto s = sign_test(x, y);
        CHECK(s.wins + s.losses + s.ties == static_cast<int>(n));
        CHECK(s.p == doctest::Approx(oracle::sign_p(s.wins, s.losses)).epsilon(1e-10));
    }
    const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
    CHECK(sign_test(ones, zeros).p == doctest::Approx(2.0 / 1024));
}

TEST_CASE("difficulty curve") {
    const std::map<std::string, double> ind{{"a", 0.9}, {"b", 0.2}, {"c", 0.5}, {"d", 0.3}, {"e", 0.7}};
    const std::map<std::string, double> oth{{"a", 1.0}, {"b", 0.6}, {"c", 0.8}, {"d", 0.4}, {"e", 0.9}};
    const auto c = difficulty_curve(ind, oth);
    REQUIRE(c.rows.size() == 5);
    CHECK(c.rows.front().question_id == "a");
    CHECK(c.rows.back().question_id == "b");
    CHECK(c.hardest_count == 2);
    CHECK(c.hardest_individual_mean == doctest::Approx(0.25));
    CHECK(c.hardest_other_mean == doctest::Approx(0.5));
    CHECK(code_of([&] { difficulty_curve(ind, {{"a", 1.0}}); }) == ErrorCode::QuestionMismatch);
}
