#include "csi/model.hpp"

#include <fstream>
#include <set>

#include "csi/error.hpp"

namespace csi {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::RosterTooSmall: return "RosterTooSmall";
        case ErrorCode::PartitionInfeasible: return "PartitionInfeasible";
        case ErrorCode::LateEvent: return "LateEvent";
        case ErrorCode::NoSeries: return "NoSeries";
        case ErrorCode::DistillFailed: return "DistillFailed";
        case ErrorCode::RelayAfterDeadline: return "RelayAfterDeadline";
        case ErrorCode::QuestionNotFound: return "QuestionNotFound";
        case ErrorCode::SessionNotFound: return "SessionNotFound";
        case ErrorCode::BadState: return "BadState";
        case ErrorCode::DeadlinePassed: return "DeadlinePassed";
        case ErrorCode::NotJoined: return "NotJoined";
        case ErrorCode::MessageInvalid: return "MessageInvalid";
        case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
        case ErrorCode::NoVotes: return "NoVotes";
        case ErrorCode::DegeneratePairs: return "DegeneratePairs";
        case ErrorCode::QuestionMismatch: return "QuestionMismatch";
        case ErrorCode::TargetBelowChance: return "TargetBelowChance";
        case ErrorCode::InvalidLog: return "InvalidLog";
    }
    return "Unknown";
}

std::string to_string(Option o) { return std::string(1, to_char(o)); }

std::optional<Option> parse_option(std::string_view label) {
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'H') return std::nullopt;
    return static_cast<Option>(label[0] - 'A');
}

Option option_from_string(std::string_view label) {
    if (auto o = parse_option(label)) return *o;
    throw Error(ErrorCode::ParseError, "not an option label: '" + std::string(label) + "'");
}

std::string agent_id_for(int subgroup_id) { return "agent-" + std::to_string(subgroup_id); }

std::string_view to_string(Color c) {
    return c == Color::introducing ? "introducing" : "reinforcing";
}

std::vector<Violation> validate_question(const Question& q, const std::string& prefix) {
    std::vector<Violation> out;
    if (q.id.empty()) out.push_back({prefix + ".id", "id-empty"});
    std::set<Option> distinct(q.options.begin(), q.options.end());
    if (q.options.size() != kOptionCount || distinct.size() != kOptionCount)
        out.push_back({prefix + ".options", "options-not-eight"});
    if (!distinct.contains(q.correct_option))
        out.push_back({prefix + ".correct_option", "correct-option-not-in-options"});
    if (q.time_limit_s <= 0) out.push_back({prefix + ".time_limit_s", "time-limit-not-positive"});
    return out;
}

std::vector<Violation> validate_config(const SessionConfig& c) {
    std::vector<Violation> out;
    const auto n = static_cast<long>(c.roster.size());

    if (c.subgroup_min < 1 || c.subgroup_min > c.subgroup_max)
        out.push_back({"subgroup_min", "min-exceeds-max"});
    if (c.subgroup_target < c.subgroup_min || c.subgroup_target > c.subgroup_max)
        out.push_back({"subgroup_target", "target-out-of-range"});

    if (n < c.subgroup_min) {
        out.push_back({"roster", "roster-too-small"});
    } else if (!(2L * c.subgroup_min <= n || n <= c.subgroup_max)) {
        out.push_back({"roster", "roster-size-infeasible"});
    }
    if (c.subgroup_count && *c.subgroup_count < 1)
        out.push_back({"subgroup_count", "count-not-positive"});

    std::set<std::string> ids;
    for (const auto& p : c.roster) {
        if (p.id.empty()) out.push_back({"roster", "participant-id-empty"});
        else if (!ids.insert(p.id).second) out.push_back({"roster", "duplicate-participant-id:" + p.id});
    }

    if (!(c.conviction_half_life_s > 0)) out.push_back({"conviction_half_life_s", "not-positive"});
    if (!(c.relay_min_interval_s > 0)) out.push_back({"relay_min_interval_s", "not-positive"});
    if (!(c.relay_cadence_s > 0)) out.push_back({"relay_cadence_s", "not-positive"});
    if (c.report_top_k < 1) out.push_back({"report_top_k", "not-positive"});

    std::set<std::string> qids;
    for (std::size_t i = 0; i < c.questions.size(); ++i) {
        const auto& q = c.questions[i];
        auto qv = validate_question(q, "questions[" + std::to_string(i) + "]");
        out.insert(out.end(), qv.begin(), qv.end());
        if (!q.id.empty() && !qids.insert(q.id).second)
            out.push_back({"questions", "duplicate-question-id:" + q.id});
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, Option o) { j = to_string(o); }

void from_json(const json& j, Option& o) {
    if (!j.is_string()) throw Error(ErrorCode::ParseError, "option label must be a string");
    o = option_from_string(j.get<std::string>());
}

void to_json(json& j, const Question& q) {
    j = json{{"id", q.id},
             {"prompt", q.prompt},
             {"options", q.options},
             {"correct_option", q.correct_option},
             {"time_limit_s", q.time_limit_s}};
}

void from_json(const json& j, Question& q) {
    q.id = j.at("id").get<std::string>();
    q.prompt = j.value("prompt", std::string{});
    if (j.contains("options")) q.options = j.at("options").get<std::vector<Option>>();
    q.correct_option = j.at("correct_option").get<Option>();
    q.time_limit_s = j.value("time_limit_s", 240);
}

void to_json(json& j, const Participant& p) {
    j = json{{"id", p.id},
             {"kind", p.kind == ParticipantKind::human ? "human" : "synthetic"},
             {"display_name", p.display_name}};
}

void from_json(const json& j, Participant& p) {
    p.id = j.at("id").get<std::string>();
    const auto kind = j.value("kind", std::string("human"));
    if (kind == "human") p.kind = ParticipantKind::human;
    else if (kind == "synthetic") p.kind = ParticipantKind::synthetic;
    else throw Error(ErrorCode::ParseError, "unknown participant kind: " + kind);
    p.display_name = j.value("display_name", p.id);
}

void to_json(json& j, const Subgroup& s) {
    j = json{{"id", s.id}, {"member_ids", s.member_ids}, {"agent_id", s.agent_id}};
}

void from_json(const json& j, Subgroup& s) {
    s.id = j.at("id").get<int>();
    s.member_ids = j.at("member_ids").get<std::vector<std::string>>();
    s.agent_id = j.at("agent_id").get<std::string>();
}

void to_json(json& j, const SessionConfig& c) {
    j = json{{"roster", c.roster},
             {"questions", c.questions},
             {"subgroup_min", c.subgroup_min},
             {"subgroup_max", c.subgroup_max},
             {"subgroup_target", c.subgroup_target},
             {"subgroup_count", c.subgroup_count ? json(*c.subgroup_count) : json(nullptr)},
             {"conviction_half_life_s", c.conviction_half_life_s},
             {"relay_min_interval_s", c.relay_min_interval_s},
             {"relay_cadence_s", c.relay_cadence_s},
             {"relays_enabled", c.relays_enabled},
             {"report_top_k", c.report_top_k},
             {"estimator", c.estimator == EstimatorKind::lexical ? "lexical" : "llm"},
             {"relay_backend", c.relay_backend == BackendKind::stub ? "stub" : "llm"},
             {"rng_seed", c.rng_seed}};
}

void from_json(const json& j, SessionConfig& c) {
    SessionConfig d;
    c.roster = j.at("roster").get<std::vector<Participant>>();
    c.questions = j.value("questions", std::vector<Question>{});
    c.subgroup_min = j.value("subgroup_min", d.subgroup_min);
    c.subgroup_max = j.value("subgroup_max", d.subgroup_max);
    c.subgroup_target = j.value("subgroup_target", d.subgroup_target);
    c.subgroup_count.reset();
    if (j.contains("subgroup_count") && !j.at("subgroup_count").is_null())
        c.subgroup_count = j.at("subgroup_count").get<int>();
    c.conviction_half_life_s = j.value("conviction_half_life_s", d.conviction_half_life_s);
    c.relay_min_interval_s = j.value("relay_min_interval_s", d.relay_min_interval_s);
    c.relay_cadence_s = j.value("relay_cadence_s", d.relay_cadence_s);
    c.relays_enabled = j.value("relays_enabled", d.relays_enabled);
    c.report_top_k = j.value("report_top_k", d.report_top_k);
    const auto est = j.value("estimator", std::string("lexical"));
    if (est == "lexical") c.estimator = EstimatorKind::lexical;
    else if (est == "llm") c.estimator = EstimatorKind::llm;
    else throw Error(ErrorCode::ParseError, "unknown estimator: " + est);
    const auto backend = j.value("relay_backend", std::string("stub"));
    if (backend == "stub") c.relay_backend = BackendKind::stub;
    else if (backend == "llm") c.relay_backend = BackendKind::llm;
    else throw Error(ErrorCode::ParseError, "unknown relay backend: " + backend);
    c.rng_seed = j.value("rng_seed", std::uint64_t{0});
}

void to_json(json& j, Color c) { j = std::string(to_string(c)); }

void from_json(const json& j, Color& c) {
    const auto s = j.get<std::string>();
    if (s == "introducing") c = Color::introducing;
    else if (s == "reinforcing") c = Color::reinforcing;
    else throw Error(ErrorCode::ParseError, "unknown color: " + s);
}

void to_json(json& j, const RelayMeta& m) {
    j = json{{"source_subgroup_id", m.source_subgroup_id}, {"option", m.option}, {"color", m.color}};
}

void from_json(const json& j, RelayMeta& m) {
    m.source_subgroup_id = j.at("source_subgroup_id").get<int>();
    m.option = j.at("option").get<Option>();
    m.color = j.at("color").get<Color>();
}

void to_json(json& j, const Message& m) {
    j = json{{"id", m.id},
             {"subgroup_id", m.subgroup_id},
             {"author", m.author},
             {"text", m.text},
             {"t_ms", m.t_ms}};
    if (m.relay_meta) j["relay_meta"] = *m.relay_meta;
}

void from_json(const json& j, Message& m) {
    m.id = j.at("id").get<std::uint64_t>();
    m.subgroup_id = j.at("subgroup_id").get<int>();
    m.author = j.at("author").get<std::string>();
    m.text = j.at("text").get<std::string>();
    m.t_ms = j.at("t_ms").get<std::int64_t>();
    m.relay_meta.reset();
    if (j.contains("relay_meta") && !j.at("relay_meta").is_null())
        m.relay_meta = j.at("relay_meta").get<RelayMeta>();
}

void to_json(json& j, const Violation& v) { j = json{{"field", v.field}, {"rule", v.rule}}; }

// ---------------------------------------------------------------------------
// Question bank

std::vector<Question> parse_question_bank(const json& doc) {
    if (!doc.is_object() || !doc.contains("questions") || !doc.at("questions").is_array())
        throw Error(ErrorCode::ParseError, "question bank must be an object with a 'questions' array");
    std::vector<Question> out;
    try {
        out = doc.at("questions").get<std::vector<Question>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("question bank: ") + e.what());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto v = validate_question(out[i], "questions[" + std::to_string(i) + "]");
        if (!v.empty()) throw Error(ErrorCode::ParseError, v.front().field + ": " + v.front().rule);
    }
    return out;
}

std::vector<Question> load_question_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open question bank: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    return parse_question_bank(doc);
}

json question_bank_json(const std::vector<Question>& questions) {
    return json{{"questions", questions}};
}

json redacted_question_json(const Question& q) {
    return json{{"id", q.id},
                {"prompt", q.prompt},
                {"options", q.options},
                {"time_limit_s", q.time_limit_s}};
}

}  // namespace csi
