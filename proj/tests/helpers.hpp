#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csi/model.hpp"
#include "csi/orchestrator.hpp"
#include "csi/rng.hpp"

namespace csi::testing {

inline std::vector<Participant> make_roster(int n) {
    std::vector<Participant> out;
    for (int i = 1; i <= n; ++i) out.push_back({"u" + std::to_string(i), ParticipantKind::human, "User " + std::to_string(i)});
    return out;
}

inline Question make_question(std::string id, Option key, int time_limit_s = 240) {
    Question q;
    q.id = std::move(id);
    q.prompt = "item " + q.id;
    q.correct_option = key;
    q.time_limit_s = time_limit_s;
    return q;
}

inline SessionConfig make_config(int n, int questions = 1, std::uint64_t seed = 1) {
    SessionConfig c;
    c.roster = make_roster(n);
    for (int i = 1; i <= questions; ++i)
        c.questions.push_back(make_question("q" + std::to_string(i), kAllOptions[static_cast<std::size_t>(i) % 8]));
    c.rng_seed = seed;
    return c;
}

struct Delivery {
    std::string recipient;
    json frame;
};

class CaptureSink final : public DeliverySink {
public:
    void deliver(const std::string& recipient, const json& frame) override { log.push_back({recipient, frame}); }
    std::vector<Delivery> log;
};

// Multiplies every strength of the wrapped estimator by `scale`.
class ScaledEstimator final : public ConvictionEstimator {
public:
    explicit ScaledEstimator(double scale) : scale_(scale) {}
    std::vector<ConvictionEvent> estimate(const Message& m, std::span<const Option> options) const override {
        auto out = inner_.estimate(m, options);
        for (auto& e : out) e.strength *= scale_;
        return out;
    }

private:
    LexicalEstimator inner_;
    double scale_;
};

struct ScriptedPost {
    std::string participant;
    std::string text;
    std::int64_t t_ms;
};

// Random chat for one question: votes, hedges, rejections and filler.
inline std::vector<ScriptedPost> random_script(const SessionConfig& c, std::uint64_t seed) {
    static const char* kReasons[] = {"the shading alternates", "the count goes up by one",
                                     "the corners rotate", "it completes the row", "the lines cross twice"};
    Rng rng(seed);
    std::vector<ScriptedPost> out;
    const std::int64_t limit = c.questions.front().deadline_ms();
    for (const auto& p : c.roster) {
        const int n = 1 + static_cast<int>(rng.index(4));
        for (int k = 0; k < n; ++k) {
            const std::string x = to_string(kAllOptions[rng.index(4) + (rng.index(3) == 0 ? 4 : 0)]);
            std::string text;
            switch (rng.index(5)) {
                case 0: text = "maybe " + x; break;
                case 1: text = "not " + x + ", looks off"; break;
                case 2: text = "hmm, hard one"; break;
                default: text = "I vote " + x + " because " + kReasons[rng.index(5)]; break;
            }
            out.push_back({p.id, text, static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(limit)))});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_ms < b.t_ms; });
    return out;
}

inline SessionConfig random_config(std::uint64_t seed) {
    Rng rng(seed ^ 0x5eed);
    auto c = make_config(10 + static_cast<int>(rng.index(31)), 1, seed);
    c.questions.front().time_limit_s = 90;
    c.questions.front().correct_option = kAllOptions[rng.index(8)];
    return c;
}

inline CloseResult play(Session& s, const std::vector<ScriptedPost>& script) {
    s.open_question(s.config().questions.front().id);
    for (const auto& p : script) s.post_message(p.participant, p.text, p.t_ms);
    return s.close_question();
}

}  // namespace csi::testing
