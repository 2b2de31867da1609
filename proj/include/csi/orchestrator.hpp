#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csi/conviction.hpp"
#include "csi/error.hpp"
#include "csi/event_log.hpp"
#include "csi/model.hpp"
#include "csi/partition.hpp"
#include "csi/relay.hpp"

namespace csi {

inline constexpr std::size_t kMaxMessageChars = 2000;

/// Receives every participant- or agent-facing frame. Recipients are
/// participant ids or agent ids.
class DeliverySink {
public:
    virtual ~DeliverySink() = default;
    virtual void deliver(const std::string& recipient_id, const json& frame) = 0;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

enum class SessionState { lobby, question_open, question_closed, finished };

std::string_view to_string(SessionState s);

/// Everything recorded about one question; the same structure is rebuilt by replay.
struct QuestionTranscript {
    Question question;
    std::int64_t opened_session_ms = 0;
    std::int64_t closed_ms = 0;  // relative to open
    std::vector<Message> messages;
    std::vector<ConvictionEvent> conviction;
    std::vector<PropagationEvent> propagation;
};

struct ForensicReport {
    std::string question_id;
    AnswerSelection selection;
    bool correct = false;
    std::string rationale_text;
    std::vector<std::uint64_t> rationale_message_ids;
    SentimentSet sentiment;
    std::vector<PropagationEvent> propagation_events;

    bool operator==(const ForensicReport&) const = default;
};

void to_json(json& j, const ForensicReport& r);

struct QuestionOutcome {
    SentimentSet sentiment;
    AnswerSelection selection;
    bool correct = false;
    ForensicReport report;
};

/// Series, selection, and report for a closed question. Pure over its inputs;
/// live sessions and replays both go through here.
QuestionOutcome evaluate_question(const QuestionTranscript& transcript, const PartitionPlan& plan,
                                  const SessionConfig& config);

struct CloseResult {
    std::string question_id;
    AnswerSelection selection;
    bool correct = false;
};

/// One deliberation session. Not thread-safe: callers serialize access
/// (the server runs every session on one event loop).
class Session {
public:
    Session(std::string id, SessionConfig config, std::shared_ptr<const ConvictionEstimator> estimator = nullptr,
            std::shared_ptr<RelayBackend> backend = nullptr, DeliverySink* sink = nullptr);

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return config_; }
    const PartitionPlan& plan() const { return plan_; }
    SessionState state() const { return state_; }
    const EventLog& log() const { return log_; }
    std::int64_t clock_ms() const { return clock_ms_; }
    const ConvictionEstimator& estimator() const { return *estimator_; }

    void set_sink(DeliverySink* sink) { sink_ = sink; }

    /// Throws NotJoined.
    const Subgroup& subgroup_of(const std::string& participant_id) const;
    const Subgroup& subgroup(int subgroup_id) const;
    std::optional<std::string> open_question_id() const;
    /// Relative deadline of the open question. Throws BadState.
    std::int64_t deadline_ms() const;

    const EventRecord& open_question(const std::string& question_id,
                                     std::optional<std::int64_t> at_session_ms = std::nullopt);

    /// `t_ms` is the receipt time relative to question open; earlier stamps are
    /// clamped to the last event time.
    Message post_message(const std::string& participant_id, std::string_view text, std::int64_t t_ms);

    /// Runs relay cycles and deadline warnings due at or before `t_ms`.
    void advance(std::int64_t t_ms);

    /// Closes at `t_ms` (default: the deadline).
    CloseResult close_question(std::optional<std::int64_t> t_ms = std::nullopt);

    ForensicReport generate_report(const std::string& question_id) const;

    std::string export_event_log() const { return log_.to_jsonl(); }

    const QuestionTranscript* transcript(const std::string& question_id) const;
    /// Live per-subgroup conviction for the open question.
    OptionValues subgroup_conviction(int subgroup_id, std::int64_t t_ms) const;
    std::size_t distill_failures() const { return distill_failures_; }

private:
    struct OpenQuestion {
        std::size_t transcript_index = 0;
        std::int64_t deadline_ms = 0;
        std::int64_t last_t_ms = 0;
        std::int64_t next_cycle_ms = 0;
        std::vector<int> warnings_pending;  // seconds-left marks, descending
        SentimentAccumulator accumulator;
        std::map<int, DestinationState> network;
        std::map<int, std::bitset<kOptionCount>> participant_support;
    };

    QuestionTranscript& current();
    const Question& find_question(const std::string& question_id) const;
    void emit(const std::string& recipient, const json& frame);
    void deliver_to_subgroup(int subgroup_id, const json& frame);
    void record_message(const Message& m, EventKind kind, const json& extra);
    void run_relay_cycle(std::int64_t t_ms);
    void log_event(std::int64_t relative_t_ms, EventKind kind, json payload);

    std::string id_;
    SessionConfig config_;
    std::shared_ptr<const ConvictionEstimator> estimator_;
    std::shared_ptr<RelayBackend> backend_;
    DeliverySink* sink_;
    PartitionPlan plan_;
    std::map<std::string, int> member_subgroup_;
    SessionState state_ = SessionState::lobby;
    EventLog log_;
    std::int64_t clock_ms_ = 0;
    std::uint64_t next_message_id_ = 1;
    std::vector<QuestionTranscript> transcripts_;
    std::map<std::string, QuestionOutcome> outcomes_;
    std::optional<OpenQuestion> open_;
    std::size_t distill_failures_ = 0;
};

/// Owns sessions by id.
class Orchestrator {
public:
    /// Throws ConfigError when validate_config reports violations.
    std::string create_session(SessionConfig config, DeliverySink* sink = nullptr);
    Session& session(const std::string& id);
    const Session& session(const std::string& id) const;
    std::vector<std::string> session_ids() const;

private:
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

struct ReplayedQuestion {
    QuestionTranscript transcript;
    QuestionOutcome outcome;
    std::optional<AnswerSelection> logged_selection;
    /// Colors recomputed from the participant messages in the log, one per propagation event.
    std::vector<Color> recomputed_colors;
};

struct Replay {
    std::string session_id;
    SessionConfig config;
    PartitionPlan plan;
    std::vector<ReplayedQuestion> questions;  // closed questions in open order
};

/// Rebuilds every closed question from the log alone, re-running the estimator
/// over logged message text. Throws InvalidLog on malformed input.
Replay replay_event_log(const EventLog& log, const ConvictionEstimator& estimator);

}  // namespace csi
