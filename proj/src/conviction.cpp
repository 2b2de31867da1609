#include "csi/conviction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string_view>

#include "csi/error.hpp"

namespace csi {

void to_json(json& j, const ConvictionEvent& e) {
    j = json{{"subgroup_id", e.subgroup_id},
             {"option", e.option},
             {"strength", e.strength},
             {"t_ms", e.t_ms},
             {"source_message_id", e.source_message_id}};
}

void from_json(const json& j, ConvictionEvent& e) {
    e.subgroup_id = j.at("subgroup_id").get<int>();
    e.option = j.at("option").get<Option>();
    e.strength = j.at("strength").get<double>();
    e.t_ms = j.at("t_ms").get<std::int64_t>();
    e.source_message_id = j.at("source_message_id").get<std::uint64_t>();
}

// ---------------------------------------------------------------------------
// Lexical estimator

namespace {

struct Token {
    std::string lower;
    std::optional<Option> option;  // set for a standalone uppercase A..H
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        const auto word = text.substr(start, i - start);
        Token tok;
        tok.lower.reserve(word.size());
        for (char c : word) tok.lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (word.size() == 1 && word[0] >= 'A' && word[0] <= 'H') tok.option = static_cast<Option>(word[0] - 'A');
        out.push_back(std::move(tok));
    }
    return out;
}

struct Cue {
    std::vector<std::string_view> words;
    double strength;
};

const std::vector<Cue>& cue_table() {
    static const std::vector<Cue> cues{
        {{"vote"}, 1.0},         {{"vote", "for"}, 1.0}, {{"answer"}, 1.0},   {{"answer", "is"}, 1.0},
        {{"i", "think"}, 1.0},   {{"thinks"}, 1.0},      {{"maybe"}, 0.4},    {{"could", "be"}, 0.4},
        {{"not"}, -1.0},         {{"rule", "out"}, -1.0}, {{"rules", "out"}, -1.0},
    };
    return cues;
}

bool cue_precedes(const std::vector<Token>& tokens, std::size_t pos, const Cue& cue) {
    if (cue.words.size() > pos) return false;
    const std::size_t start = pos - cue.words.size();
    for (std::size_t k = 0; k < cue.words.size(); ++k)
        if (tokens[start + k].lower != cue.words[k]) return false;
    return true;
}

bool stronger(double candidate, double current) {
    const double a = std::fabs(candidate), b = std::fabs(current);
    if (a != b) return a > b;
    return candidate < current;
}

}  // namespace

std::vector<ConvictionEvent> LexicalEstimator::estimate(const Message& message,
                                                        std::span<const Option> options) const {
    const auto tokens = tokenize(message.text);
    std::array<std::optional<double>, kOptionCount> best{};
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!tokens[i].option) continue;
        const Option o = *tokens[i].option;
        if (std::find(options.begin(), options.end(), o) == options.end()) continue;
        for (const auto& cue : cue_table()) {
            if (!cue_precedes(tokens, i, cue)) continue;
            auto& slot = best[option_index(o)];
            if (!slot || stronger(cue.strength, *slot)) slot = cue.strength;
        }
    }
    std::vector<ConvictionEvent> out;
    for (Option o : kAllOptions) {
        if (const auto& s = best[option_index(o)])
            out.push_back(ConvictionEvent{message.subgroup_id, o, *s, message.t_ms, message.id});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accumulator

SentimentAccumulator::SentimentAccumulator(double half_life_s, std::int64_t deadline_ms,
                                           std::vector<int> subgroup_ids)
    : half_life_ms_(half_life_s * 1000.0), deadline_ms_(deadline_ms) {
    if (!(half_life_s > 0)) throw Error(ErrorCode::InvalidArgument, "half-life must be positive");
    for (int id : subgroup_ids) lanes_[id];
}

void SentimentAccumulator::add(const ConvictionEvent& e) {
    if (e.t_ms > deadline_ms_)
        throw Error(ErrorCode::LateEvent,
                    "event at " + std::to_string(e.t_ms) + " ms after deadline " + std::to_string(deadline_ms_));
    if (!events_.empty() && e.t_ms < events_.back().t_ms)
        throw Error(ErrorCode::InvalidArgument, "conviction events must be ordered by time");
    if (!std::isfinite(e.strength)) throw Error(ErrorCode::InvalidArgument, "strength is not finite");
    auto& lane = lanes_[e.subgroup_id][option_index(e.option)];
    lane.t_ms.push_back(e.t_ms);
    lane.strength.push_back(e.strength);
    events_.push_back(e);
}

double SentimentAccumulator::lane_value(const Lane& lane, std::int64_t t_ms) const {
    double v = 0.0;
    for (std::size_t i = 0; i < lane.t_ms.size() && lane.t_ms[i] <= t_ms; ++i)
        v += lane.strength[i] * std::exp2(-static_cast<double>(t_ms - lane.t_ms[i]) / half_life_ms_);
    return v;
}

OptionValues SentimentAccumulator::lanes_value(const Lanes& lanes, std::int64_t t_ms) const {
    OptionValues out{};
    for (std::size_t o = 0; o < kOptionCount; ++o) out[o] = lane_value(lanes[o], t_ms);
    return out;
}

OptionValues SentimentAccumulator::subgroup_values(int subgroup_id, std::int64_t t_ms) const {
    auto it = lanes_.find(subgroup_id);
    if (it == lanes_.end()) return OptionValues{};
    return lanes_value(it->second, t_ms);
}

OptionValues SentimentAccumulator::global_values(std::int64_t t_ms) const {
    OptionValues total{};
    for (const auto& [id, lanes] : lanes_) {
        const auto v = lanes_value(lanes, t_ms);
        for (std::size_t o = 0; o < kOptionCount; ++o) total[o] += v[o];
    }
    return total;
}

SentimentSet SentimentAccumulator::series(std::int64_t until_ms, std::int64_t cadence_ms) const {
    if (cadence_ms <= 0) throw Error(ErrorCode::InvalidArgument, "cadence must be positive");
    std::vector<std::int64_t> grid;
    for (std::int64_t t = 0; t <= until_ms; t += cadence_ms) grid.push_back(t);
    if (until_ms >= 0 && (grid.empty() || grid.back() != until_ms)) grid.push_back(until_ms);

    SentimentSet set;
    set.global.t_ms = grid;
    for (auto& v : set.global.values) v.assign(grid.size(), 0.0);

    for (const auto& [id, lanes] : lanes_) {
        SentimentSeries s;
        s.subgroup_id = id;
        s.t_ms = grid;
        for (std::size_t o = 0; o < kOptionCount; ++o) {
            auto& vals = s.values[o];
            vals.reserve(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) {
                vals.push_back(lane_value(lanes[o], grid[k]));
                set.global.values[o][k] += vals.back();
            }
        }
        set.subgroups.emplace(id, std::move(s));
    }
    return set;
}

SentimentSet accumulate(std::span<const ConvictionEvent> events, double half_life_s, std::int64_t deadline_ms,
                        std::vector<int> subgroup_ids) {
    SentimentAccumulator acc(half_life_s, deadline_ms, std::move(subgroup_ids));
    for (const auto& e : events) acc.add(e);
    return acc.series(deadline_ms);
}

// ---------------------------------------------------------------------------
// Selection

void to_json(json& j, const AnswerSelection& a) {
    j = json{{"option", a.option},
             {"value_at_deadline", a.value_at_deadline},
             {"tie_broken", a.tie_broken},
             {"no_signal", a.no_signal}};
}

void from_json(const json& j, AnswerSelection& a) {
    a.option = j.at("option").get<Option>();
    a.value_at_deadline = j.at("value_at_deadline").get<double>();
    a.tie_broken = j.at("tie_broken").get<bool>();
    a.no_signal = j.at("no_signal").get<bool>();
}

AnswerSelection final_answer(const SentimentSeries& global, std::int64_t deadline_ms) {
    if (global.empty()) throw Error(ErrorCode::NoSeries, "empty sentiment series");
    const auto upper = std::upper_bound(global.t_ms.begin(), global.t_ms.end(), deadline_ms);
    if (upper == global.t_ms.begin()) throw Error(ErrorCode::NoSeries, "series starts after the deadline");
    const auto idx = static_cast<std::size_t>(upper - global.t_ms.begin()) - 1;

    const bool all_zero = std::all_of(global.values.begin(), global.values.end(),
                                      [&](const auto& v) { return v.at(idx) == 0.0; });
    if (all_zero) return AnswerSelection{Option::A, 0.0, false, true};

    double best = global.values[0].at(idx);
    for (const auto& v : global.values) best = std::max(best, v.at(idx));

    std::vector<Option> tied;
    for (Option o : kAllOptions)
        if (global.values[option_index(o)][idx] == best) tied.push_back(o);

    if (tied.size() == 1) return AnswerSelection{tied.front(), best, false, false};

    auto first_reached = [&](Option o) {
        const auto& v = global.values[option_index(o)];
        for (std::size_t k = 0; k <= idx; ++k)
            if (v[k] >= best) return k;
        return idx;
    };
    Option winner = tied.front();
    std::size_t winner_at = first_reached(winner);
    for (std::size_t i = 1; i < tied.size(); ++i) {
        const auto at = first_reached(tied[i]);
        if (at < winner_at) {
            winner = tied[i];
            winner_at = at;
        }
    }
    return AnswerSelection{winner, best, true, false};
}

json export_series(const SentimentSeries& s) {
    json out = json::array();
    const json scope = s.subgroup_id ? json(*s.subgroup_id) : json("GLOBAL");
    for (Option o : kAllOptions) {
        json samples = json::array();
        const auto& v = s.values[option_index(o)];
        for (std::size_t k = 0; k < s.t_ms.size(); ++k) samples.push_back(json::array({s.t_ms[k], v[k]}));
        out.push_back(json{{"scope", scope}, {"option", o}, {"samples", std::move(samples)}});
    }
    return out;
}

json export_series(const SentimentSet& set) {
    json out = export_series(set.global);
    for (const auto& [id, s] : set.subgroups)
        for (auto& rec : export_series(s)) out.push_back(std::move(rec));
    return out;
}

}  // namespace csi
