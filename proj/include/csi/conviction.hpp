#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csi/model.hpp"

namespace csi {

struct ConvictionEvent {
    int subgroup_id = 0;
    Option option = Option::A;
    double strength = 0.0;  // [-1, +1]
    std::int64_t t_ms = 0;
    std::uint64_t source_message_id = 0;

    bool operator==(const ConvictionEvent&) const = default;
};

void to_json(json& j, const ConvictionEvent& e);
void from_json(const json& j, ConvictionEvent& e);

/// Turns one chat message into signed per-option support.
class ConvictionEstimator {
public:
    virtual ~ConvictionEstimator() = default;
    virtual std::vector<ConvictionEvent> estimate(const Message& message,
                                                  std::span<const Option> options) const = 0;
};

/// Deterministic cue-table estimator.
///
/// An option token is a standalone uppercase letter A..H. It scores when the
/// words right before it form a cue:
///   +1.0  "vote X", "vote for X", "answer X", "answer is X", "I think X",
///         "thinks X" (the relay template)
///   +0.4  "maybe X", "could be X"
///   -1.0  "not X", "rule out X", "rules out X"
/// Per option the strongest cue wins; equal magnitudes resolve to the negative.
/// Option letters without a cue are ignored.
class LexicalEstimator final : public ConvictionEstimator {
public:
    std::vector<ConvictionEvent> estimate(const Message& message,
                                          std::span<const Option> options) const override;
};

struct Sample {
    std::int64_t t_ms = 0;
    double value = 0.0;
};

/// One scope's time series; all options share the sample grid.
struct SentimentSeries {
    std::optional<int> subgroup_id;  // nullopt: GLOBAL
    std::vector<std::int64_t> t_ms;
    std::array<std::vector<double>, kOptionCount> values;

    bool empty() const { return t_ms.empty(); }
    bool operator==(const SentimentSeries&) const = default;
};

struct SentimentSet {
    std::map<int, SentimentSeries> subgroups;
    SentimentSeries global;

    bool operator==(const SentimentSet&) const = default;
};

inline constexpr std::int64_t kSampleCadenceMs = 1000;

/// Single-writer accumulator over a time-ordered conviction stream.
///
/// Scope value for option o at time t is the sum of strength * 2^(-(t - t_e) / half_life)
/// over that scope's events with t_e <= t. GLOBAL is the sum of subgroup values,
/// taken in subgroup-id order so live snapshots and batch series agree bit for bit.
class SentimentAccumulator {
public:
    SentimentAccumulator(double half_life_s, std::int64_t deadline_ms, std::vector<int> subgroup_ids = {});

    /// Throws LateEvent past the deadline, InvalidArgument when out of order.
    /// Strengths are not range-checked here (scaled streams are linear).
    void add(const ConvictionEvent& event);

    OptionValues subgroup_values(int subgroup_id, std::int64_t t_ms) const;
    OptionValues global_values(std::int64_t t_ms) const;

    /// Samples every `cadence_ms` from 0, plus `until_ms` itself.
    SentimentSet series(std::int64_t until_ms, std::int64_t cadence_ms = kSampleCadenceMs) const;

    std::span<const ConvictionEvent> events() const { return events_; }
    std::int64_t deadline_ms() const { return deadline_ms_; }
    double half_life_s() const { return half_life_ms_ / 1000.0; }

private:
    struct Lane {
        std::vector<std::int64_t> t_ms;
        std::vector<double> strength;
    };
    using Lanes = std::array<Lane, kOptionCount>;

    double lane_value(const Lane& lane, std::int64_t t_ms) const;
    OptionValues lanes_value(const Lanes& lanes, std::int64_t t_ms) const;

    double half_life_ms_;
    std::int64_t deadline_ms_;
    std::map<int, Lanes> lanes_;
    std::vector<ConvictionEvent> events_;
};

SentimentSet accumulate(std::span<const ConvictionEvent> events, double half_life_s, std::int64_t deadline_ms,
                        std::vector<int> subgroup_ids = {});

struct AnswerSelection {
    Option option = Option::A;
    double value_at_deadline = 0.0;
    bool tie_broken = false;
    bool no_signal = false;

    bool operator==(const AnswerSelection&) const = default;
};

void to_json(json& j, const AnswerSelection& a);
void from_json(const json& j, AnswerSelection& a);

/// Argmax of the GLOBAL series at the last sample <= deadline. Exact ties go to
/// the option that first reached the tied value, then to the lowest label; an
/// all-zero snapshot returns A with no_signal. Throws NoSeries.
AnswerSelection final_answer(const SentimentSeries& global, std::int64_t deadline_ms);

/// [{scope, option, samples: [[t_ms, value], ...]}, ...]; scope is "GLOBAL" or a subgroup id.
json export_series(const SentimentSet& set);
json export_series(const SentimentSeries& series);

}  // namespace csi
