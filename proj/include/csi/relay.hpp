#pragma once

// Per-subgroup relay agent: observe the local transcript, distill the best
// supported argument, pick a destination subgroup, and express it there.
// Agents only move content that participants already wrote.

#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csi/conviction.hpp"
#include "csi/model.hpp"

namespace csi {

struct Insight {
    Option option = Option::A;
    std::string argument_text;
    double local_conviction = 0.0;
    std::int64_t first_seen_ms = 0;
    /// Supporting participant messages, strongest first; the first is cited.
    std::vector<std::uint64_t> source_message_ids;

    bool operator==(const Insight&) const = default;
};

struct RelayPayload {
    int source_subgroup_id = 0;
    Option option = Option::A;
    std::string summary_text;
    std::int64_t created_ms = 0;

    bool operator==(const RelayPayload&) const = default;
};

struct PropagationEvent {
    int source_subgroup_id = 0;
    int dest_subgroup_id = 0;
    Option option = Option::A;
    Color color = Color::introducing;
    std::int64_t t_ms = 0;
    std::uint64_t message_id = 0;  // the expressed relay message

    bool operator==(const PropagationEvent&) const = default;
};

void to_json(json& j, const Insight& i);
void to_json(json& j, const RelayPayload& p);
void from_json(const json& j, RelayPayload& p);
void to_json(json& j, const PropagationEvent& e);
void from_json(const json& j, PropagationEvent& e);

/// At most one insight per option with positive local conviction and at least
/// one positive participant message. Agent-authored messages in the window are
/// never cited. Result is ordered by descending local conviction, then label.
std::vector<Insight> observe(std::span<const Message> window, const OptionValues& local_conviction,
                             const ConvictionEstimator& estimator);

/// Same, reading local conviction from a subgroup series at `now_ms`.
std::vector<Insight> observe(std::span<const Message> window, const SentimentSeries& subgroup_series,
                             std::int64_t now_ms, const ConvictionEstimator& estimator);

struct SummaryRequest {
    std::span<const Message> window;
    Option option = Option::A;
    std::string insight_text;
};

/// Produces the summary an agent carries to another subgroup.
/// Implementations throw Error(DistillFailed) on failure.
class RelayBackend {
public:
    virtual ~RelayBackend() = default;
    virtual std::string summarize(const SummaryRequest& request) = 0;
};

inline constexpr std::size_t kMaxSummaryChars = 280;

/// Verbatim excerpt: the cited message, cut to 280 bytes at a word boundary.
class StubRelayBackend final : public RelayBackend {
public:
    std::string summarize(const SummaryRequest& request) override;
};

/// Longest prefix of at most `max_len` bytes that ends at a word boundary;
/// hard cut (on a UTF-8 boundary) when the first word alone is too long.
std::string truncate_at_word_boundary(std::string_view text, std::size_t max_len = kMaxSummaryChars);

/// True when `text` names an option label other than `allowed` as a standalone token.
bool mentions_other_option(std::string_view text, Option allowed);

RelayPayload distill(const Insight& insight, int source_subgroup_id, std::int64_t now_ms, RelayBackend& backend,
                     std::span<const Message> window = {});

struct DestinationState {
    int subgroup_id = 0;
    std::optional<std::int64_t> last_relay_in_ms;
    std::bitset<kOptionCount> options_seen;
};

/// Destination for `payload`, or nullopt when none is eligible. Excludes the
/// source and anything that received a relay less than `min_interval_s` ago.
/// Score = 2 * [option unseen] + staleness, where staleness in [0, 1] ranks
/// eligible destinations by age of their last incoming relay (never = oldest).
/// Ties go to the lowest subgroup id.
std::optional<int> matchmake(const RelayPayload& payload, std::span<const DestinationState> network,
                             std::int64_t now_ms, double min_interval_s);

/// Introducing when no participant in the destination has argued for the option yet.
constexpr Color relay_color(bool destination_already_supports) {
    return destination_already_supports ? Color::reinforcing : Color::introducing;
}

/// Fixed template agent messages use; the lexical estimator parses its "thinks X" cue.
std::string relay_text(Option option, std::string_view summary);

struct Expression {
    Message message;
    PropagationEvent propagation;
};

/// Builds the agent-authored message for `dest`. Throws RelayAfterDeadline when
/// now_ms > deadline_ms and InvalidArgument when dest is the source.
Expression express(const RelayPayload& payload, int dest_subgroup_id, const std::string& dest_agent_id,
                   bool destination_already_supports, std::uint64_t message_id, std::int64_t now_ms,
                   std::int64_t deadline_ms);

}  // namespace csi
