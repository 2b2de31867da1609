#pragma once

// Individual and statistical-aggregation baselines, IQ conversion, and the
// significance tests used to compare response methods.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csi/model.hpp"
#include "csi/rng.hpp"

namespace csi {

struct ResponseMatrix {
    std::vector<std::string> respondents;
    std::vector<std::string> questions;
    /// choice[r][q]; nullopt marks an unanswered cell.
    std::vector<std::vector<std::optional<Option>>> choice;
    std::vector<std::optional<double>> elapsed_s;

    std::size_t size() const { return respondents.size(); }
    bool operator==(const ResponseMatrix&) const = default;
};

/// CSV with header `respondent,elapsed_s,<question ids...>`; cells are A..H or empty.
ResponseMatrix parse_response_csv(std::string_view text);
ResponseMatrix load_response_csv(const std::string& path);
std::string to_csv(const ResponseMatrix& m);

using AnswerKey = std::map<std::string, Option>;

/// Accepts either {"<question id>": "<label>", ...} or a question bank document.
AnswerKey parse_answer_key(const json& doc);
AnswerKey load_answer_key(const std::string& path);
AnswerKey answer_key(const std::vector<Question>& questions);

struct FilterResult {
    ResponseMatrix clean;
    std::vector<std::string> flagged;
};

/// Flags respondents faster than `min_elapsed_s` or giving one option to every
/// question (two or more answered).
FilterResult filter_bad_actors(const ResponseMatrix& m, double min_elapsed_s = 120.0);

struct ScoreDistribution {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
};

enum class Deviation { population, sample };

struct IndividualScores {
    std::vector<double> fraction_correct;  // per respondent
    ScoreDistribution distribution;
    std::size_t incomplete_respondents = 0;  // had unanswered cells, scored as wrong
};

/// Throws QuestionNotFound when the key misses a matrix question.
IndividualScores score_individuals(const ResponseMatrix& m, const AnswerKey& key,
                                   Deviation deviation = Deviation::population);

/// Mean accuracy per question over respondents.
std::map<std::string, double> per_question_accuracy(const ResponseMatrix& m, const AnswerKey& key);

/// 100 + 15 (x - mu) / sigma. Throws DegenerateDistribution when sigma is 0.
double iq_score(double x, const ScoreDistribution& dist);

/// Percentile of `iq` under N(100, 15^2), in [0, 100].
double percentile(double iq);

struct PluralityResult {
    Option option = Option::A;
    bool tie = false;
};

/// Modal vote; ties drawn uniformly from `rng`. Throws NoVotes.
PluralityResult plurality(std::span<const Option> votes, Rng& rng);

struct WocParams {
    int n_groups = 6;
    int group_size_low = 5;
    int group_size_high = 6;
    int reps = 10000;
    std::uint64_t seed = 0;
};

struct WocResult {
    std::vector<std::string> questions;
    std::vector<double> per_question_accuracy;
    std::vector<double> rep_accuracy;
    double overall = 0.0;
    double overall_stderr = 0.0;
    double group_tie_rate = 0.0;       // share of group answers decided by a tie draw
    double population_tie_rate = 0.0;  // share of population answers decided by a tie draw
};

/// Bootstrap statistical aggregation: each rep draws n_groups groups with
/// replacement (size uniform in [low, high]), takes each group's plurality per
/// question, then the plurality over group answers. Rep r uses the stream
/// derive_seed(seed, r), so results do not depend on evaluation order.
WocResult woc_bootstrap(const ResponseMatrix& m, const AnswerKey& key, const WocParams& params = {});

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
    int df = 0;
    double mean_difference = 0.0;
};

/// Paired t over a[i] - b[i]. Throws InvalidArgument for mismatched or short
/// inputs and DegeneratePairs when every difference is zero.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);

struct SignTestResult {
    int wins = 0;  // a > b
    int losses = 0;
    int ties = 0;
    double p = 1.0;  // two-sided exact binomial, ties dropped
};

SignTestResult sign_test(std::span<const double> a, std::span<const double> b);

struct DifficultyRow {
    std::string question_id;
    double individual = 0.0;
    double other = 0.0;
};

struct DifficultyCurve {
    std::vector<DifficultyRow> rows;  // easiest first (descending individual accuracy)
    std::size_t hardest_count = 0;
    double hardest_individual_mean = 0.0;
    double hardest_other_mean = 0.0;
};

/// Throws QuestionMismatch unless both maps cover the same ids.
DifficultyCurve difficulty_curve(const std::map<std::string, double>& individual,
                                 const std::map<std::string, double>& other);

/// Summary figures of the reference survey cohort and its aggregations. Only
/// the summary is available, not the responses behind it.
struct ReferenceCohort {
    double individual_mean = 0.457;
    double individual_sd = 0.186;
    double woc_accuracy = 0.641;
    double deliberation_accuracy = 0.805;
    double hardest_half_individual = 0.295;
    double hardest_half_deliberation = 0.701;
};

inline constexpr ReferenceCohort kReferenceCohort{};

}  // namespace csi
