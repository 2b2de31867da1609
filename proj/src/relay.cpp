#include "csi/relay.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "csi/error.hpp"

namespace csi {

void to_json(json& j, const Insight& i) {
    j = json{{"option", i.option},
             {"argument_text", i.argument_text},
             {"local_conviction", i.local_conviction},
             {"first_seen_ms", i.first_seen_ms},
             {"source_message_ids", i.source_message_ids}};
}

void to_json(json& j, const RelayPayload& p) {
    j = json{{"source_subgroup_id", p.source_subgroup_id},
             {"option", p.option},
             {"summary_text", p.summary_text},
             {"created_ms", p.created_ms}};
}

void from_json(const json& j, RelayPayload& p) {
    p.source_subgroup_id = j.at("source_subgroup_id").get<int>();
    p.option = j.at("option").get<Option>();
    p.summary_text = j.at("summary_text").get<std::string>();
    p.created_ms = j.at("created_ms").get<std::int64_t>();
}

void to_json(json& j, const PropagationEvent& e) {
    j = json{{"source_subgroup_id", e.source_subgroup_id},
             {"dest_subgroup_id", e.dest_subgroup_id},
             {"option", e.option},
             {"color", e.color},
             {"t_ms", e.t_ms},
             {"message_id", e.message_id}};
}

void from_json(const json& j, PropagationEvent& e) {
    e.source_subgroup_id = j.at("source_subgroup_id").get<int>();
    e.dest_subgroup_id = j.at("dest_subgroup_id").get<int>();
    e.option = j.at("option").get<Option>();
    e.color = j.at("color").get<Color>();
    e.t_ms = j.at("t_ms").get<std::int64_t>();
    e.message_id = j.at("message_id").get<std::uint64_t>();
}

// ---------------------------------------------------------------------------
// observe

std::vector<Insight> observe(std::span<const Message> window, const OptionValues& local_conviction,
                             const ConvictionEstimator& estimator) {
    struct Support {
        double strength;
        const Message* message;
    };
    std::map<Option, std::vector<Support>> support;
    for (const auto& m : window) {
        if (m.is_relay()) continue;
        for (const auto& e : estimator.estimate(m, kAllOptions))
            if (e.strength > 0) support[e.option].push_back({e.strength, &m});
    }

    std::vector<Insight> out;
    for (auto& [option, msgs] : support) {
        const double conviction = local_conviction[option_index(option)];
        if (!(conviction > 0)) continue;
        std::stable_sort(msgs.begin(), msgs.end(),
                         [](const Support& a, const Support& b) { return a.strength > b.strength; });
        Insight in;
        in.option = option;
        in.argument_text = msgs.front().message->text;
        in.local_conviction = conviction;
        in.first_seen_ms = msgs.front().message->t_ms;
        for (const auto& s : msgs) {
            in.first_seen_ms = std::min(in.first_seen_ms, s.message->t_ms);
            in.source_message_ids.push_back(s.message->id);
        }
        out.push_back(std::move(in));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Insight& a, const Insight& b) { return a.local_conviction > b.local_conviction; });
    return out;
}

std::vector<Insight> observe(std::span<const Message> window, const SentimentSeries& subgroup_series,
                             std::int64_t now_ms, const ConvictionEstimator& estimator) {
    OptionValues local{};
    const auto upper = std::upper_bound(subgroup_series.t_ms.begin(), subgroup_series.t_ms.end(), now_ms);
    if (upper != subgroup_series.t_ms.begin()) {
        const auto idx = static_cast<std::size_t>(upper - subgroup_series.t_ms.begin()) - 1;
        for (std::size_t o = 0; o < kOptionCount; ++o) local[o] = subgroup_series.values[o][idx];
    }
    return observe(window, local, estimator);
}

// ---------------------------------------------------------------------------
// distill

std::string truncate_at_word_boundary(std::string_view text, std::size_t max_len) {
    if (text.size() <= max_len) return std::string(text);
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };

    std::size_t cut = max_len;
    if (!is_space(text[cut])) {
        // Back up to the start of the word that straddles the limit.
        while (cut > 0 && !is_space(text[cut - 1])) --cut;
    }
    while (cut > 0 && is_space(text[cut - 1])) --cut;
    if (cut == 0) {
        cut = max_len;
        while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    }
    return std::string(text.substr(0, cut));
}

bool mentions_other_option(std::string_view text, Option allowed) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c < 'A' || c > 'H') continue;
        const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
        const bool right = i + 1 == text.size() || !std::isalnum(static_cast<unsigned char>(text[i + 1]));
        if (left && right && c != to_char(allowed)) return true;
    }
    return false;
}

std::string StubRelayBackend::summarize(const SummaryRequest& request) {
    return truncate_at_word_boundary(request.insight_text);
}

RelayPayload distill(const Insight& insight, int source_subgroup_id, std::int64_t now_ms, RelayBackend& backend,
                     std::span<const Message> window) {
    SummaryRequest req{window, insight.option, insight.argument_text};
    std::string summary = backend.summarize(req);
    if (summary.empty()) throw Error(ErrorCode::DistillFailed, "backend returned an empty summary");
    return RelayPayload{source_subgroup_id, insight.option, std::move(summary), now_ms};
}

// ---------------------------------------------------------------------------
// matchmake

std::optional<int> matchmake(const RelayPayload& payload, std::span<const DestinationState> network,
                             std::int64_t now_ms, double min_interval_s) {
    const auto min_interval_ms = static_cast<std::int64_t>(min_interval_s * 1000.0);
    std::vector<const DestinationState*> eligible;
    for (const auto& d : network) {
        if (d.subgroup_id == payload.source_subgroup_id) continue;
        if (d.last_relay_in_ms && now_ms - *d.last_relay_in_ms < min_interval_ms) continue;
        eligible.push_back(&d);
    }
    if (eligible.empty()) return std::nullopt;

    // Distinct last-relay times, oldest first; equal times share a rank.
    auto age_key = [](const DestinationState* d) {
        return d->last_relay_in_ms ? *d->last_relay_in_ms : INT64_MIN;
    };
    std::vector<std::int64_t> times;
    for (const auto* d : eligible) times.push_back(age_key(d));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::optional<int> best_id;
    double best_score = -1.0;
    for (const auto* d : eligible) {
        const auto rank = static_cast<std::size_t>(
            std::lower_bound(times.begin(), times.end(), age_key(d)) - times.begin());
        const double staleness =
            times.size() <= 1 ? 1.0
                              : 1.0 - static_cast<double>(rank) / static_cast<double>(times.size() - 1);
        const double novelty = d->options_seen.test(option_index(payload.option)) ? 0.0 : 2.0;
        const double score = novelty + staleness;
        if (score > best_score || (score == best_score && d->subgroup_id < *best_id)) {
            best_score = score;
            best_id = d->subgroup_id;
        }
    }
    return best_id;
}

// ---------------------------------------------------------------------------
// express

std::string relay_text(Option option, std::string_view summary) {
    return "Another group thinks " + to_string(option) + ": " + std::string(summary);
}

Expression express(const RelayPayload& payload, int dest_subgroup_id, const std::string& dest_agent_id,
                   bool destination_already_supports, std::uint64_t message_id, std::int64_t now_ms,
                   std::int64_t deadline_ms) {
    if (dest_subgroup_id == payload.source_subgroup_id)
        throw Error(ErrorCode::InvalidArgument, "relay destination equals source");
    if (now_ms > deadline_ms)
        throw Error(ErrorCode::RelayAfterDeadline,
                    "relay at " + std::to_string(now_ms) + " ms, deadline " + std::to_string(deadline_ms));

    const Color color = relay_color(destination_already_supports);
    Expression out;
    out.message.id = message_id;
    out.message.subgroup_id = dest_subgroup_id;
    out.message.author = dest_agent_id;
    out.message.text = relay_text(payload.option, payload.summary_text);
    out.message.t_ms = now_ms;
    out.message.relay_meta = RelayMeta{payload.source_subgroup_id, payload.option, color};
    out.propagation = PropagationEvent{payload.source_subgroup_id, dest_subgroup_id, payload.option,
                                       color, now_ms, message_id};
    return out;
}

}  // namespace csi
