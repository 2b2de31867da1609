#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csi/model.hpp"

namespace csi {

enum class EventKind {
    session_created,
    subgroup_assigned,
    question_opened,
    message_posted,
    conviction_updated,
    relay_sent,
    relay_expressed,
    question_closed,
    answer_selected,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

struct EventRecord {
    std::uint64_t seq = 0;
    std::int64_t t_ms = 0;  // session logical clock
    EventKind kind = EventKind::session_created;
    json payload;

    bool operator==(const EventRecord&) const = default;
};

json to_json_record(const EventRecord& r);
EventRecord record_from_json(const json& j);

/// Append-only, totally ordered by (t_ms, seq). seq is dense from 0.
class EventLog {
public:
    const EventRecord& append(std::int64_t t_ms, EventKind kind, json payload);

    std::span<const EventRecord> records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    /// One canonical JSON object per line, keys sorted, '\n' terminated.
    std::string to_jsonl() const;
    static EventLog from_jsonl(std::string_view text);
    static EventLog from_records(std::vector<EventRecord> records);

private:
    std::vector<EventRecord> records_;
};

}  // namespace csi
