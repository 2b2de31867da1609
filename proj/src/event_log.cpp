#include "csi/event_log.hpp"

#include <array>
#include <utility>

#include "csi/error.hpp"

namespace csi {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 9> kKindNames{{
    {EventKind::session_created, "session_created"},
    {EventKind::subgroup_assigned, "subgroup_assigned"},
    {EventKind::question_opened, "question_opened"},
    {EventKind::message_posted, "message_posted"},
    {EventKind::conviction_updated, "conviction_updated"},
    {EventKind::relay_sent, "relay_sent"},
    {EventKind::relay_expressed, "relay_expressed"},
    {EventKind::question_closed, "question_closed"},
    {EventKind::answer_selected, "answer_selected"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

EventKind event_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    throw Error(ErrorCode::InvalidLog, "unknown event kind: " + std::string(name));
}

json to_json_record(const EventRecord& r) {
    return json{{"seq", r.seq}, {"t_ms", r.t_ms}, {"kind", to_string(r.kind)}, {"payload", r.payload}};
}

EventRecord record_from_json(const json& j) {
    try {
        EventRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.t_ms = j.at("t_ms").get<std::int64_t>();
        r.kind = event_kind_from_string(j.at("kind").get<std::string>());
        r.payload = j.at("payload");
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidLog, e.what());
    }
}

const EventRecord& EventLog::append(std::int64_t t_ms, EventKind kind, json payload) {
    if (!records_.empty() && t_ms < records_.back().t_ms)
        throw Error(ErrorCode::InvalidArgument, "event log time must be non-decreasing");
    records_.push_back(EventRecord{records_.size(), t_ms, kind, std::move(payload)});
    return records_.back();
}

std::string EventLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
        out += to_json_record(r).dump();
        out += '\n';
    }
    return out;
}

EventLog EventLog::from_records(std::vector<EventRecord> records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].seq != i)
            throw Error(ErrorCode::InvalidLog, "sequence gap at record " + std::to_string(i));
        if (i > 0 && records[i].t_ms < records[i - 1].t_ms)
            throw Error(ErrorCode::InvalidLog, "time goes backwards at seq " + std::to_string(i));
    }
    EventLog log;
    log.records_ = std::move(records);
    return log;
}

EventLog EventLog::from_jsonl(std::string_view text) {
    std::vector<EventRecord> records;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::InvalidLog, e.what());
        }
        records.push_back(record_from_json(j));
    }
    return from_records(std::move(records));
}

}  // namespace csi
