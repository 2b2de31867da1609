#pragma once

// Synthetic participants and the individual / WoC / CSI experiment harness.
//
// Belief model: for question q, participant i favors the correct option with
// probability p = logistic(ability_i - difficulty_q); otherwise it favors the
// question's lure with probability lure_share, else a uniformly drawn other
// option. The prior belief puts `belief_concentration` on the favored option
// and spreads the rest evenly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csi/baselines.hpp"
#include "csi/conviction.hpp"
#include "csi/model.hpp"
#include "csi/orchestrator.hpp"

namespace csi {

struct SyntheticParticipant {
    std::string id;
    double ability = 0.0;  // logit scale; +inf marks an expert who always holds the key
    /// Prior mass on the correct option for a question of average difficulty.
    double competence = 0.0;
    double persuasibility = 0.0;  // [0, 1]
    double talkativeness = 0.0;   // messages per minute
};

struct SimModelConfig {
    int population = 35;
    double target_accuracy = 0.457;
    double truth_quality_bonus = 0.5;
    double base_strength = 1.0;
    double persuasion_rate = 24.0;
    double message_rate_per_min = 2.0;
    double belief_concentration = 0.98;
    double lure_share = 0.7;
    double ability_sd = 0.8;
    double difficulty_sd = 1.5;
    double persuasibility_min = 0.2;
    double persuasibility_max = 1.0;
    double read_delay_s = 2.0;
    std::uint64_t seed = 42;
    /// Seeds question difficulty and lures; defaults to `seed`.
    std::optional<std::uint64_t> question_seed;

    bool operator==(const SimModelConfig&) const = default;
};

void to_json(json& j, const SimModelConfig& c);
void from_json(const json& j, SimModelConfig& c);

/// Throws InvalidArgument listing the first broken rule.
void validate_model(const SimModelConfig& c);

struct QuestionTraits {
    double difficulty = 0.0;
    Option lure = Option::A;
};

struct Population {
    SimModelConfig model;
    double ability_mean = 0.0;
    double concentration = 0.0;  // effective belief concentration after calibration
    std::vector<SyntheticParticipant> participants;

    QuestionTraits traits(const Question& q) const;
    /// Probability that participant i favors the key on q.
    double p_correct(std::size_t i, const Question& q) const;
    /// Prior belief of participant i on q; deterministic in (model.seed, i, q.id).
    OptionValues initial_belief(std::size_t i, const Question& q) const;

    std::vector<Participant> roster() const;
};

/// Expected isolated accuracy of an average member of `pop` over `questions`.
double expected_accuracy(const Population& pop, const std::vector<Question>& questions);

/// Draws a population whose expected isolated accuracy over `questions` equals
/// the target. Throws TargetBelowChance for targets <= 1/8. A target of 1 makes
/// every participant an expert.
Population calibrate(const SimModelConfig& config, const std::vector<Question>& questions);

/// Each participant samples its prior once per question.
ResponseMatrix run_individual(const Population& pop, const std::vector<Question>& questions, std::uint64_t seed);

struct CsiRun {
    std::vector<CloseResult> selections;
    double accuracy = 0.0;
    std::string event_log;  // JSONL
    std::size_t messages_posted = 0;
    std::size_t relays = 0;
};

/// Scripted deliberation over a live Session. `session` supplies everything but
/// roster, questions and rng_seed.
CsiRun run_csi(const Population& pop, const std::vector<Question>& questions, const SessionConfig& session,
               std::uint64_t seed);

/// Belief after reading an argument for `option`.
void persuade(OptionValues& belief, Option option, double strength, double persuasibility, double rate);

struct ExperimentConfig {
    SimModelConfig model;
    SessionConfig session;
    std::vector<Question> questions;
    int n_runs = 50;
    std::uint64_t seed = 42;
    WocParams woc;  // seed is replaced per run
    /// When set, each run's event log is written there.
    std::optional<std::string> log_dir;
};

struct MethodSummary {
    std::string name;
    std::vector<double> per_run;
    double mean_accuracy = 0.0;
    double sd = 0.0;
    std::optional<double> iq;
    std::optional<double> percentile;
};

struct MethodComparison {
    std::string a;
    std::string b;
    std::optional<TTestResult> t_test;  // nullopt when every pair ties
    SignTestResult sign;
};

struct ExperimentSummary {
    MethodSummary individual;
    MethodSummary woc;
    MethodSummary csi;
    std::vector<MethodComparison> comparisons;  // csi-woc, csi-individual, woc-individual
    ScoreDistribution individual_distribution;
    DifficultyCurve difficulty;  // individual vs csi, pooled over runs
    double woc_group_tie_rate = 0.0;
    double woc_population_tie_rate = 0.0;
    std::vector<std::string> event_log_paths;
    std::size_t n_runs = 0;

    const MethodComparison& comparison(const std::string& a, const std::string& b) const;
};

ExperimentSummary compare(const ExperimentConfig& config);

json to_json(const ExperimentSummary& s);

/// Synthetic bank of `n` eight-option items with seeded keys.
std::vector<Question> synthetic_question_bank(int n, std::uint64_t seed);

}  // namespace csi
