#pragma once

// Shared domain types for deliberation sessions. All types are plain values;
// the orchestrator's event loop is the only place they are mutated.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace csi {

using json = nlohmann::json;

enum class Option : std::uint8_t { A, B, C, D, E, F, G, H };

inline constexpr std::size_t kOptionCount = 8;
inline constexpr std::array<Option, kOptionCount> kAllOptions{
    Option::A, Option::B, Option::C, Option::D, Option::E, Option::F, Option::G, Option::H};

/// Per-option scalar, indexed by option_index().
using OptionValues = std::array<double, kOptionCount>;

constexpr std::size_t option_index(Option o) noexcept { return static_cast<std::size_t>(o); }
constexpr char to_char(Option o) noexcept { return static_cast<char>('A' + option_index(o)); }
std::string to_string(Option o);
std::optional<Option> parse_option(std::string_view label);
/// Throws ParseError when `label` is not one of A..H.
Option option_from_string(std::string_view label);

struct Question {
    std::string id;
    std::string prompt;  // text or opaque asset URI
    std::vector<Option> options{kAllOptions.begin(), kAllOptions.end()};
    Option correct_option = Option::A;
    int time_limit_s = 240;

    std::int64_t deadline_ms() const { return static_cast<std::int64_t>(time_limit_s) * 1000; }
    bool operator==(const Question&) const = default;
};

enum class ParticipantKind { human, synthetic };

struct Participant {
    std::string id;
    ParticipantKind kind = ParticipantKind::human;
    std::string display_name;

    bool operator==(const Participant&) const = default;
};

struct Subgroup {
    int id = 0;
    std::vector<std::string> member_ids;
    std::string agent_id;

    bool operator==(const Subgroup&) const = default;
};

std::string agent_id_for(int subgroup_id);

enum class EstimatorKind { lexical, llm };
enum class BackendKind { stub, llm };

struct SessionConfig {
    std::vector<Participant> roster;
    std::vector<Question> questions;
    int subgroup_min = 4;
    int subgroup_max = 7;
    int subgroup_target = 5;
    /// Forces the number of subgroups instead of floor(n / target).
    std::optional<int> subgroup_count;
    double conviction_half_life_s = 60.0;
    double relay_min_interval_s = 15.0;
    /// Session seconds between agent relay cycles; relays_enabled=false turns them off.
    double relay_cadence_s = 10.0;
    bool relays_enabled = true;
    int report_top_k = 5;
    EstimatorKind estimator = EstimatorKind::lexical;
    BackendKind relay_backend = BackendKind::stub;
    std::uint64_t rng_seed = 0;

    bool operator==(const SessionConfig&) const = default;
};

enum class Color { introducing, reinforcing };

std::string_view to_string(Color c);

struct RelayMeta {
    int source_subgroup_id = 0;
    Option option = Option::A;
    Color color = Color::introducing;

    bool operator==(const RelayMeta&) const = default;
};

struct Message {
    std::uint64_t id = 0;
    int subgroup_id = 0;
    std::string author;
    std::string text;
    std::int64_t t_ms = 0;  // relative to question open
    std::optional<RelayMeta> relay_meta;

    bool is_relay() const { return relay_meta.has_value(); }
    bool operator==(const Message&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

/// Empty iff every SessionConfig invariant holds.
std::vector<Violation> validate_config(const SessionConfig& config);

/// Question-level invariants, reported against `field_prefix`.
std::vector<Violation> validate_question(const Question& q, const std::string& field_prefix);

// Question bank: { "questions": [ {id, prompt, options, correct_option, time_limit_s} ] }
std::vector<Question> parse_question_bank(const json& doc);
std::vector<Question> load_question_bank(const std::string& path);
json question_bank_json(const std::vector<Question>& questions);

/// Participant-facing view of a question (no answer key).
json redacted_question_json(const Question& q);

void to_json(json& j, Option o);
void from_json(const json& j, Option& o);
void to_json(json& j, const Question& q);
void from_json(const json& j, Question& q);
void to_json(json& j, const Participant& p);
void from_json(const json& j, Participant& p);
void to_json(json& j, const Subgroup& s);
void from_json(const json& j, Subgroup& s);
void to_json(json& j, const SessionConfig& c);
void from_json(const json& j, SessionConfig& c);
void to_json(json& j, Color c);
void from_json(const json& j, Color& c);
void to_json(json& j, const RelayMeta& m);
void from_json(const json& j, RelayMeta& m);
void to_json(json& j, const Message& m);
void from_json(const json& j, Message& m);
void to_json(json& j, const Violation& v);

}  // namespace csi
