#include "csi/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "csi/llm.hpp"

namespace csi {

namespace {

std::string describe(const std::vector<Violation>& violations) {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.field + ": " + v.rule;
    }
    return out;
}

bool blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::vector<int> subgroup_ids(const PartitionPlan& plan) {
    std::vector<int> ids;
    for (const auto& g : plan.subgroups) ids.push_back(g.id);
    return ids;
}

}  // namespace

ConfigError::ConfigError(std::vector<Violation> violations)
    : Error(ErrorCode::ConfigInvalid, describe(violations)), violations_(std::move(violations)) {}

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::lobby: return "lobby";
        case SessionState::question_open: return "question_open";
        case SessionState::question_closed: return "question_closed";
        case SessionState::finished: return "finished";
    }
    return "unknown";
}

void to_json(json& j, const ForensicReport& r) {
    j = json{{"question_id", r.question_id},
             {"selection", r.selection},
             {"correct", r.correct},
             {"rationale_text", r.rationale_text},
             {"rationale_message_ids", r.rationale_message_ids},
             {"sentiment", export_series(r.sentiment)},
             {"propagation_events", r.propagation_events}};
}

// ---------------------------------------------------------------------------
// Outcome evaluation

QuestionOutcome evaluate_question(const QuestionTranscript& t, const PartitionPlan& plan,
                                  const SessionConfig& config) {
    SentimentAccumulator acc(config.conviction_half_life_s, t.closed_ms, subgroup_ids(plan));
    for (const auto& e : t.conviction) acc.add(e);

    QuestionOutcome out;
    out.sentiment = acc.series(t.closed_ms);
    out.selection = final_answer(out.sentiment.global, t.closed_ms);
    out.correct = out.selection.option == t.question.correct_option;

    auto& report = out.report;
    report.question_id = t.question.id;
    report.selection = out.selection;
    report.correct = out.correct;
    report.sentiment = out.sentiment;
    report.propagation_events = t.propagation;

    if (!out.selection.no_signal) {
        // Rank participant messages by their decayed contribution to the winner at close.
        struct Contribution {
            double value;
            const Message* message;
        };
        std::map<std::uint64_t, const Message*> by_id;
        for (const auto& m : t.messages) by_id[m.id] = &m;
        const double half_life_ms = config.conviction_half_life_s * 1000.0;
        std::vector<Contribution> ranked;
        for (const auto& e : t.conviction) {
            if (e.option != out.selection.option || !(e.strength > 0)) continue;
            const auto it = by_id.find(e.source_message_id);
            if (it == by_id.end() || it->second->is_relay()) continue;
            const double v = e.strength * std::exp2(-static_cast<double>(t.closed_ms - e.t_ms) / half_life_ms);
            ranked.push_back({v, it->second});
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const Contribution& a, const Contribution& b) {
            if (a.value != b.value) return a.value > b.value;
            return a.message->id < b.message->id;
        });
        std::set<std::string> seen;
        for (const auto& c : ranked) {
            if (report.rationale_message_ids.size() >= static_cast<std::size_t>(config.report_top_k)) break;
            if (!seen.insert(c.message->text).second) continue;
            if (!report.rationale_text.empty()) report.rationale_text += '\n';
            report.rationale_text += "[msg " + std::to_string(c.message->id) + "] " + c.message->text;
            report.rationale_message_ids.push_back(c.message->id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, SessionConfig config, std::shared_ptr<const ConvictionEstimator> estimator,
                 std::shared_ptr<RelayBackend> backend, DeliverySink* sink)
    : id_(std::move(id)),
      config_(std::move(config)),
      estimator_(std::move(estimator)),
      backend_(std::move(backend)),
      sink_(sink) {
    if (auto violations = validate_config(config_); !violations.empty()) throw ConfigError(std::move(violations));
    if (!estimator_) estimator_ = make_estimator(config_.estimator);
    if (!backend_) backend_ = make_relay_backend(config_.relay_backend);

    std::vector<std::string> roster;
    for (const auto& p : config_.roster) roster.push_back(p.id);
    plan_ = partition(roster, config_);
    for (const auto& g : plan_.subgroups)
        for (const auto& m : g.member_ids) member_subgroup_[m] = g.id;

    log_.append(0, EventKind::session_created, json{{"session_id", id_}, {"config", config_}});
    for (const auto& g : plan_.subgroups)
        log_.append(0, EventKind::subgroup_assigned, json{{"subgroup", g}, {"seed_used", plan_.seed_used}});
}

const Subgroup& Session::subgroup_of(const std::string& participant_id) const {
    const auto it = member_subgroup_.find(participant_id);
    if (it == member_subgroup_.end()) throw Error(ErrorCode::NotJoined, "unknown participant: " + participant_id);
    return subgroup(it->second);
}

const Subgroup& Session::subgroup(int subgroup_id) const {
    for (const auto& g : plan_.subgroups)
        if (g.id == subgroup_id) return g;
    throw Error(ErrorCode::InvalidArgument, "unknown subgroup " + std::to_string(subgroup_id));
}

std::optional<std::string> Session::open_question_id() const {
    if (!open_) return std::nullopt;
    return transcripts_[open_->transcript_index].question.id;
}

std::int64_t Session::deadline_ms() const {
    if (!open_) throw Error(ErrorCode::BadState, "no open question");
    return open_->deadline_ms;
}

const Question& Session::find_question(const std::string& question_id) const {
    for (const auto& q : config_.questions)
        if (q.id == question_id) return q;
    throw Error(ErrorCode::QuestionNotFound, question_id);
}

QuestionTranscript& Session::current() { return transcripts_[open_->transcript_index]; }

const QuestionTranscript* Session::transcript(const std::string& question_id) const {
    for (const auto& t : transcripts_)
        if (t.question.id == question_id) return &t;
    return nullptr;
}

void Session::emit(const std::string& recipient, const json& frame) {
    if (sink_) sink_->deliver(recipient, frame);
}

void Session::deliver_to_subgroup(int subgroup_id, const json& frame) {
    const auto& g = subgroup(subgroup_id);
    for (const auto& m : g.member_ids) emit(m, frame);
    emit(g.agent_id, frame);
}

void Session::log_event(std::int64_t relative_t_ms, EventKind kind, json payload) {
    const std::int64_t t = open_ ? current().opened_session_ms + relative_t_ms : relative_t_ms;
    clock_ms_ = std::max(clock_ms_, t);
    log_.append(clock_ms_, kind, std::move(payload));
}

const EventRecord& Session::open_question(const std::string& question_id, std::optional<std::int64_t> at_session_ms) {
    if (state_ != SessionState::lobby && state_ != SessionState::question_closed)
        throw Error(ErrorCode::BadState, "cannot open a question in state " + std::string(to_string(state_)));
    const Question& q = find_question(question_id);
    if (transcript(question_id)) throw Error(ErrorCode::BadState, "question already asked: " + question_id);

    const std::int64_t opened = std::max(clock_ms_, at_session_ms.value_or(clock_ms_));
    clock_ms_ = opened;

    QuestionTranscript t;
    t.question = q;
    t.opened_session_ms = opened;
    transcripts_.push_back(std::move(t));

    const auto ids = subgroup_ids(plan_);
    open_.emplace(OpenQuestion{transcripts_.size() - 1, q.deadline_ms(), 0,
                               static_cast<std::int64_t>(std::llround(config_.relay_cadence_s * 1000.0)),
                               {},
                               SentimentAccumulator(config_.conviction_half_life_s, q.deadline_ms(), ids),
                               {},
                               {}});
    for (int mark : {60, 10})
        if (q.time_limit_s > mark) open_->warnings_pending.push_back(mark);
    for (int id : ids) {
        open_->network[id] = DestinationState{id, std::nullopt, {}};
        open_->participant_support[id] = {};
    }
    state_ = SessionState::question_open;

    log_.append(clock_ms_, EventKind::question_opened,
                json{{"question_id", q.id}, {"opened_ms", opened}, {"deadline_ms", q.deadline_ms()}});
    const json redacted = redacted_question_json(q);
    for (const auto& g : plan_.subgroups) {
        const json frame{{"type", "question"},
                         {"question", redacted},
                         {"deadline_ms", q.deadline_ms()},
                         {"subgroup_id", g.id}};
        for (const auto& m : g.member_ids) emit(m, frame);
        emit(g.agent_id, frame);
    }
    return log_.records().back();
}

void Session::record_message(const Message& m, EventKind kind, const json& extra) {
    json payload{{"question_id", current().question.id}, {"message", m}};
    for (const auto& [k, v] : extra.items()) payload[k] = v;
    log_event(m.t_ms, kind, std::move(payload));
    current().messages.push_back(m);
    deliver_to_subgroup(m.subgroup_id, json{{"type", "message"}, {"message", m}});

    for (const auto& e : estimator_->estimate(m, current().question.options)) {
        open_->accumulator.add(e);
        current().conviction.push_back(e);
        log_event(e.t_ms, EventKind::conviction_updated, json{{"question_id", current().question.id}, {"event", e}});
        if (!m.is_relay() && e.strength > 0) {
            open_->participant_support[e.subgroup_id].set(option_index(e.option));
            open_->network[e.subgroup_id].options_seen.set(option_index(e.option));
        }
    }
}

Message Session::post_message(const std::string& participant_id, std::string_view text, std::int64_t t_ms) {
    if (state_ != SessionState::question_open) throw Error(ErrorCode::BadState, "no open question");
    const int sg = subgroup_of(participant_id).id;
    if (text.empty() || blank(text) || text.size() > kMaxMessageChars)
        throw Error(ErrorCode::MessageInvalid, "message must be 1.." + std::to_string(kMaxMessageChars) + " chars");
    if (t_ms > open_->deadline_ms)
        throw Error(ErrorCode::DeadlinePassed,
                    "post at " + std::to_string(t_ms) + " ms, deadline " + std::to_string(open_->deadline_ms));

    const std::int64_t t = std::max(t_ms, open_->last_t_ms);
    advance(t);

    Message m;
    m.id = next_message_id_++;
    m.subgroup_id = sg;
    m.author = participant_id;
    m.text = std::string(text);
    m.t_ms = t;
    open_->last_t_ms = t;
    record_message(m, EventKind::message_posted, json::object());
    return m;
}

void Session::advance(std::int64_t t_ms) {
    if (state_ != SessionState::question_open) throw Error(ErrorCode::BadState, "no open question");
    const std::int64_t limit = std::min(t_ms, open_->deadline_ms);
    const auto cadence = static_cast<std::int64_t>(std::llround(config_.relay_cadence_s * 1000.0));

    while (true) {
        const bool cycle_due = config_.relays_enabled && open_->next_cycle_ms <= limit;
        const std::int64_t warn_at = open_->warnings_pending.empty()
                                         ? INT64_MAX
                                         : open_->deadline_ms - open_->warnings_pending.front() * 1000LL;
        const bool warn_due = warn_at <= limit;
        if (!cycle_due && !warn_due) break;

        if (warn_due && (!cycle_due || warn_at <= open_->next_cycle_ms)) {
            const int seconds_left = open_->warnings_pending.front();
            open_->warnings_pending.erase(open_->warnings_pending.begin());
            open_->last_t_ms = std::max(open_->last_t_ms, warn_at);
            const json frame{{"type", "deadline_warning"},
                             {"question_id", current().question.id},
                             {"seconds_left", seconds_left}};
            for (const auto& g : plan_.subgroups)
                for (const auto& m : g.member_ids) emit(m, frame);
            continue;
        }
        const std::int64_t at = open_->next_cycle_ms;
        open_->next_cycle_ms += cadence;
        open_->last_t_ms = std::max(open_->last_t_ms, at);
        run_relay_cycle(at);
    }
    open_->last_t_ms = std::max(open_->last_t_ms, limit);
}

void Session::run_relay_cycle(std::int64_t t_ms) {
    auto& q = current();
    for (const auto& g : plan_.subgroups) {
        std::vector<Message> window;
        for (const auto& m : q.messages)
            if (m.subgroup_id == g.id && !m.is_relay()) window.push_back(m);
        if (window.empty()) continue;

        const auto insights = observe(window, open_->accumulator.subgroup_values(g.id, t_ms), *estimator_);
        std::vector<DestinationState> network;
        for (const auto& [id, d] : open_->network) network.push_back(d);

        for (const auto& insight : insights) {
            const RelayPayload probe{g.id, insight.option, {}, t_ms};
            const auto dest = matchmake(probe, network, t_ms, config_.relay_min_interval_s);
            if (!dest) continue;

            RelayPayload payload;
            try {
                payload = distill(insight, g.id, t_ms, *backend_, window);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DistillFailed) throw;
                ++distill_failures_;
                break;
            }
            const auto& dest_group = subgroup(*dest);
            const bool supported = open_->participant_support[*dest].test(option_index(payload.option));
            auto expr = express(payload, *dest, dest_group.agent_id, supported, next_message_id_++, t_ms,
                                open_->deadline_ms);

            auto& state = open_->network[*dest];
            state.last_relay_in_ms = t_ms;
            state.options_seen.set(option_index(payload.option));

            log_event(t_ms, EventKind::relay_sent,
                      json{{"question_id", q.question.id}, {"payload", payload}, {"dest_subgroup_id", *dest}});
            q.propagation.push_back(expr.propagation);
            record_message(expr.message, EventKind::relay_expressed, json{{"propagation", expr.propagation}});
            break;  // one payload per agent per cycle
        }
    }
}

CloseResult Session::close_question(std::optional<std::int64_t> t_ms) {
    if (state_ != SessionState::question_open) throw Error(ErrorCode::BadState, "no open question");
    const std::int64_t at = std::clamp(t_ms.value_or(open_->deadline_ms), open_->last_t_ms, open_->deadline_ms);
    advance(at);

    auto& t = current();
    t.closed_ms = at;
    auto outcome = evaluate_question(t, plan_, config_);
    const CloseResult result{t.question.id, outcome.selection, outcome.correct};

    log_event(at, EventKind::question_closed, json{{"question_id", t.question.id}, {"closed_ms", at}});
    log_event(at, EventKind::answer_selected,
              json{{"question_id", t.question.id}, {"selection", outcome.selection}, {"correct", outcome.correct}});
    const json frame{{"type", "closed"}, {"question_id", t.question.id}, {"selected_option", outcome.selection.option}};
    for (const auto& g : plan_.subgroups) {
        for (const auto& m : g.member_ids) emit(m, frame);
        emit(g.agent_id, frame);
    }

    outcomes_.emplace(t.question.id, std::move(outcome));
    open_.reset();
    state_ = transcripts_.size() == config_.questions.size() ? SessionState::finished : SessionState::question_closed;
    return result;
}

ForensicReport Session::generate_report(const std::string& question_id) const {
    find_question(question_id);
    const auto it = outcomes_.find(question_id);
    if (it == outcomes_.end()) throw Error(ErrorCode::BadState, "question not closed: " + question_id);
    return it->second.report;
}

OptionValues Session::subgroup_conviction(int subgroup_id, std::int64_t t_ms) const {
    if (!open_) throw Error(ErrorCode::BadState, "no open question");
    return open_->accumulator.subgroup_values(subgroup_id, t_ms);
}

// ---------------------------------------------------------------------------
// Orchestrator

std::string Orchestrator::create_session(SessionConfig config, DeliverySink* sink) {
    const std::string id = "s" + std::to_string(next_id_++);
    auto session = std::make_unique<Session>(id, std::move(config), nullptr, nullptr, sink);
    sessions_.emplace(id, std::move(session));
    return id;
}

Session& Orchestrator::session(const std::string& id) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, id);
    return *it->second;
}

const Session& Orchestrator::session(const std::string& id) const {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, id);
    return *it->second;
}

std::vector<std::string> Orchestrator::session_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
}

// ---------------------------------------------------------------------------
// Replay

Replay replay_event_log(const EventLog& log, const ConvictionEstimator& estimator) {
    Replay out;
    bool created = false;
    struct Pending {
        QuestionTranscript transcript;
        std::map<int, std::bitset<kOptionCount>> support;
        std::vector<Color> colors;
        std::optional<AnswerSelection> logged;
        bool closed = false;
    };
    std::vector<Pending> questions;
    std::map<std::string, std::size_t> index;

    auto pending = [&](const json& payload) -> Pending& {
        const auto qid = payload.at("question_id").get<std::string>();
        const auto it = index.find(qid);
        if (it == index.end()) throw Error(ErrorCode::InvalidLog, "event for unopened question " + qid);
        return questions[it->second];
    };

    try {
        for (const auto& r : log.records()) {
            switch (r.kind) {
                case EventKind::session_created:
                    out.session_id = r.payload.at("session_id").get<std::string>();
                    out.config = r.payload.at("config").get<SessionConfig>();
                    created = true;
                    break;
                case EventKind::subgroup_assigned:
                    out.plan.subgroups.push_back(r.payload.at("subgroup").get<Subgroup>());
                    out.plan.seed_used = r.payload.at("seed_used").get<std::uint64_t>();
                    break;
                case EventKind::question_opened: {
                    if (!created) throw Error(ErrorCode::InvalidLog, "question before session_created");
                    const auto qid = r.payload.at("question_id").get<std::string>();
                    Pending p;
                    bool found = false;
                    for (const auto& q : out.config.questions)
                        if (q.id == qid) {
                            p.transcript.question = q;
                            found = true;
                        }
                    if (!found) throw Error(ErrorCode::InvalidLog, "unknown question " + qid);
                    p.transcript.opened_session_ms = r.payload.at("opened_ms").get<std::int64_t>();
                    for (const auto& g : out.plan.subgroups) p.support[g.id] = {};
                    index[qid] = questions.size();
                    questions.push_back(std::move(p));
                    break;
                }
                case EventKind::message_posted:
                case EventKind::relay_expressed: {
                    auto& p = pending(r.payload);
                    const auto m = r.payload.at("message").get<Message>();
                    if (r.kind == EventKind::relay_expressed) {
                        auto prop = r.payload.at("propagation").get<PropagationEvent>();
                        p.colors.push_back(relay_color(p.support[prop.dest_subgroup_id].test(option_index(prop.option))));
                        p.transcript.propagation.push_back(prop);
                    }
                    p.transcript.messages.push_back(m);
                    for (const auto& e : estimator.estimate(m, p.transcript.question.options)) {
                        p.transcript.conviction.push_back(e);
                        if (!m.is_relay() && e.strength > 0) p.support[e.subgroup_id].set(option_index(e.option));
                    }
                    break;
                }
                case EventKind::question_closed: {
                    auto& p = pending(r.payload);
                    p.transcript.closed_ms = r.payload.at("closed_ms").get<std::int64_t>();
                    p.closed = true;
                    break;
                }
                case EventKind::answer_selected:
                    pending(r.payload).logged = r.payload.at("selection").get<AnswerSelection>();
                    break;
                case EventKind::conviction_updated:
                case EventKind::relay_sent:
                    break;
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidLog, e.what());
    }
    if (!created) throw Error(ErrorCode::InvalidLog, "log has no session_created record");

    for (auto& p : questions) {
        if (!p.closed) continue;
        ReplayedQuestion rq;
        rq.outcome = evaluate_question(p.transcript, out.plan, out.config);
        rq.transcript = std::move(p.transcript);
        rq.logged_selection = p.logged;
        rq.recomputed_colors = std::move(p.colors);
        out.questions.push_back(std::move(rq));
    }
    return out;
}

}  // namespace csi
