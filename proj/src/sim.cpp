#include "csi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>

#include "csi/error.hpp"
#include "csi/rng.hpp"

namespace csi {

namespace {

constexpr std::uint64_t kPopulationStream = 0x706f70;
constexpr std::uint64_t kBeliefStream = 0x62656c;
constexpr std::uint64_t kQuestionStream = 0x717374;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string participant_id(int index, int population) {
    const auto width = std::max<std::size_t>(2, std::to_string(population).size());
    auto digits = std::to_string(index + 1);
    return "p" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// E[logistic(mu + sd z - d)] for z ~ N(0, 1), averaged over `difficulties`.
// Trapezoid rule on [-8, 8]; deterministic so calibration is reproducible.
double mean_p_correct(double mu, double sd, const std::vector<double>& difficulties) {
    constexpr int kSteps = 1600;
    constexpr double kLo = -8.0, kHi = 8.0;
    const double h = (kHi - kLo) / kSteps;
    double total = 0.0;
    for (double d : difficulties) {
        double acc = 0.0;
        for (int k = 0; k <= kSteps; ++k) {
            const double z = kLo + h * k;
            const double w = (k == 0 || k == kSteps) ? 0.5 : 1.0;
            acc += w * std::exp(-0.5 * z * z) * logistic(mu + sd * z - d);
        }
        total += acc * h / std::sqrt(2.0 * M_PI);
    }
    return total / static_cast<double>(difficulties.size());
}

double off_mass(double concentration, std::size_t n_options) {
    return (1.0 - concentration) / static_cast<double>(n_options - 1);
}

Option modal(const OptionValues& belief) {
    std::size_t best = 0;
    for (std::size_t o = 1; o < kOptionCount; ++o)
        if (belief[o] > belief[best]) best = o;
    return kAllOptions[best];
}

const std::vector<std::string>& reasons() {
    static const std::vector<std::string> r{
        "because the shapes rotate clockwise along each row",
        "because the count of dots grows by one each step",
        "because the shading alternates down the columns",
        "because the outer figure stays fixed while the inner one turns",
        "because each row combines the first two figures",
        "because the lines add up across the row",
        "because the missing piece completes the symmetry",
        "because every column keeps one of each shape",
    };
    return r;
}

}  // namespace

void to_json(json& j, const SimModelConfig& c) {
    j = json{{"population", c.population},
             {"target_accuracy", c.target_accuracy},
             {"truth_quality_bonus", c.truth_quality_bonus},
             {"base_strength", c.base_strength},
             {"persuasion_rate", c.persuasion_rate},
             {"message_rate_per_min", c.message_rate_per_min},
             {"belief_concentration", c.belief_concentration},
             {"lure_share", c.lure_share},
             {"ability_sd", c.ability_sd},
             {"difficulty_sd", c.difficulty_sd},
             {"persuasibility_min", c.persuasibility_min},
             {"persuasibility_max", c.persuasibility_max},
             {"read_delay_s", c.read_delay_s},
             {"seed", c.seed}};
    if (c.question_seed) j["question_seed"] = *c.question_seed;
}

void from_json(const json& j, SimModelConfig& c) {
    SimModelConfig d;
    c.population = j.value("population", d.population);
    c.target_accuracy = j.value("target_accuracy", d.target_accuracy);
    c.truth_quality_bonus = j.value("truth_quality_bonus", d.truth_quality_bonus);
    c.base_strength = j.value("base_strength", d.base_strength);
    c.persuasion_rate = j.value("persuasion_rate", d.persuasion_rate);
    c.message_rate_per_min = j.value("message_rate_per_min", d.message_rate_per_min);
    c.belief_concentration = j.value("belief_concentration", d.belief_concentration);
    c.lure_share = j.value("lure_share", d.lure_share);
    c.ability_sd = j.value("ability_sd", d.ability_sd);
    c.difficulty_sd = j.value("difficulty_sd", d.difficulty_sd);
    c.persuasibility_min = j.value("persuasibility_min", d.persuasibility_min);
    c.persuasibility_max = j.value("persuasibility_max", d.persuasibility_max);
    c.read_delay_s = j.value("read_delay_s", d.read_delay_s);
    c.seed = j.value("seed", d.seed);
    if (j.contains("question_seed")) c.question_seed = j.at("question_seed").get<std::uint64_t>();
}

void validate_model(const SimModelConfig& c) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "sim model: " + what); };
    if (c.population < 1) fail("population must be positive");
    if (!(c.truth_quality_bonus >= 0)) fail("truth_quality_bonus must be >= 0");
    if (!(c.base_strength > 0)) fail("base_strength must be positive");
    if (!(c.persuasion_rate >= 0)) fail("persuasion_rate must be >= 0");
    if (!(c.message_rate_per_min > 0)) fail("message_rate_per_min must be positive");
    if (!(c.belief_concentration > 0.125 && c.belief_concentration <= 1.0))
        fail("belief_concentration must be in (1/8, 1]");
    if (!(c.lure_share >= 0 && c.lure_share <= 1)) fail("lure_share must be in [0, 1]");
    if (!(c.ability_sd >= 0) || !(c.difficulty_sd >= 0)) fail("spreads must be >= 0");
    if (!(c.persuasibility_min >= 0 && c.persuasibility_min <= c.persuasibility_max && c.persuasibility_max <= 1))
        fail("persuasibility range must lie in [0, 1]");
    if (!(c.read_delay_s >= 0)) fail("read_delay_s must be >= 0");
}

// ---------------------------------------------------------------------------
// Population

QuestionTraits Population::traits(const Question& q) const {
    Rng rng(derive_seed(derive_seed(model.question_seed.value_or(model.seed), kQuestionStream), fnv1a(q.id)));
    QuestionTraits t;
    t.difficulty = model.difficulty_sd * rng.normal();
    std::vector<Option> others;
    for (Option o : q.options)
        if (o != q.correct_option) others.push_back(o);
    t.lure = others[rng.index(others.size())];
    return t;
}

double Population::p_correct(std::size_t i, const Question& q) const {
    const double a = participants.at(i).ability;
    if (std::isinf(a)) return a > 0 ? 1.0 : 0.0;
    return logistic(a - traits(q).difficulty);
}

OptionValues Population::initial_belief(std::size_t i, const Question& q) const {
    const auto& p = participants.at(i);
    OptionValues belief{};
    if (std::isinf(p.ability) && p.ability > 0) {
        belief[option_index(q.correct_option)] = 1.0;
        return belief;
    }
    const auto t = traits(q);
    Rng rng(derive_seed(derive_seed(derive_seed(model.seed, kBeliefStream), i), fnv1a(q.id)));
    Option favored = q.correct_option;
    if (rng.uniform() >= logistic(p.ability - t.difficulty)) {
        if (rng.uniform() < model.lure_share) {
            favored = t.lure;
        } else {
            std::vector<Option> rest;
            for (Option o : q.options)
                if (o != q.correct_option && o != t.lure) rest.push_back(o);
            favored = rest[rng.index(rest.size())];
        }
    }
    const double off = off_mass(concentration, q.options.size());
    for (Option o : q.options) belief[option_index(o)] = off;
    belief[option_index(favored)] = concentration;
    return belief;
}

std::vector<Participant> Population::roster() const {
    std::vector<Participant> out;
    for (const auto& p : participants) out.push_back({p.id, ParticipantKind::synthetic, p.id});
    return out;
}

double expected_accuracy(const Population& pop, const std::vector<Question>& questions) {
    if (pop.participants.empty() || questions.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pop.participants.size(); ++i)
        for (const auto& q : questions) {
            const double p = pop.p_correct(i, q);
            if (std::isinf(pop.participants[i].ability)) {
                total += p;
                continue;
            }
            total += p * pop.concentration + (1.0 - p) * off_mass(pop.concentration, q.options.size());
        }
    return total / static_cast<double>(pop.participants.size() * questions.size());
}

Population calibrate(const SimModelConfig& config, const std::vector<Question>& questions) {
    validate_model(config);
    const double target = config.target_accuracy;
    if (!(target > 1.0 / kOptionCount))
        throw Error(ErrorCode::TargetBelowChance, "target accuracy must exceed 1/8");
    if (target > 1.0) throw Error(ErrorCode::InvalidArgument, "target accuracy above 1");
    if (questions.empty()) throw Error(ErrorCode::InvalidArgument, "no questions to calibrate against");

    Population pop;
    pop.model = config;
    // Accuracy is capped by the concentration; targets near the cap use one-hot beliefs.
    pop.concentration = target >= config.belief_concentration - 0.02 ? 1.0 : config.belief_concentration;

    const bool experts = target >= 1.0;
    if (!experts) {
        const double off = off_mass(pop.concentration, kOptionCount);
        const double p_star = (target - off) / (pop.concentration - off);
        std::vector<double> difficulties;
        for (const auto& q : questions) difficulties.push_back(pop.traits(q).difficulty);
        double lo = -40.0, hi = 40.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_p_correct(mid, config.ability_sd, difficulties) < p_star ? lo : hi) = mid;
        }
        pop.ability_mean = 0.5 * (lo + hi);
    }

    const std::uint64_t base = derive_seed(config.seed, kPopulationStream);
    for (int i = 0; i < config.population; ++i) {
        Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
        SyntheticParticipant p;
        p.id = participant_id(i, config.population);
        const double z = rng.normal();
        p.ability = experts ? std::numeric_limits<double>::infinity() : pop.ability_mean + config.ability_sd * z;
        p.persuasibility =
            config.persuasibility_min + (config.persuasibility_max - config.persuasibility_min) * rng.uniform();
        p.talkativeness = config.message_rate_per_min * std::exp(0.5 * rng.normal() - 0.125);
        if (experts) {
            p.competence = 1.0;
        } else {
            const double pc = logistic(p.ability);
            p.competence = pc * pop.concentration + (1.0 - pc) * off_mass(pop.concentration, kOptionCount);
        }
        pop.participants.push_back(std::move(p));
    }
    return pop;
}

// ---------------------------------------------------------------------------
// Isolated answering

ResponseMatrix run_individual(const Population& pop, const std::vector<Question>& questions, std::uint64_t seed) {
    ResponseMatrix m;
    for (const auto& q : questions) m.questions.push_back(q.id);
    for (std::size_t i = 0; i < pop.participants.size(); ++i) {
        m.respondents.push_back(pop.participants[i].id);
        m.elapsed_s.push_back(30.0 * static_cast<double>(questions.size()));
        std::vector<std::optional<Option>> row;
        for (const auto& q : questions) {
            const auto belief = pop.initial_belief(i, q);
            Rng rng(derive_seed(derive_seed(seed, i), fnv1a(q.id)));
            double u = rng.uniform();
            Option pick = q.options.back();
            for (Option o : q.options) {
                const double w = belief[option_index(o)];
                if (u < w) {
                    pick = o;
                    break;
                }
                u -= w;
            }
            row.push_back(pick);
        }
        m.choice.push_back(std::move(row));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Deliberation

void persuade(OptionValues& belief, Option option, double strength, double persuasibility, double rate) {
    belief[option_index(option)] *= 1.0 + rate * strength * persuasibility;
    const double sum = std::accumulate(belief.begin(), belief.end(), 0.0);
    for (double& b : belief) b /= sum;
}

namespace {

struct SimEvent {
    enum Kind { tick = 0, read = 1, post = 2 };
    std::int64_t t_ms;
    Kind kind;
    std::uint64_t seq;
    std::size_t participant;
    Option option;

    bool operator>(const SimEvent& o) const {
        return std::tie(t_ms, kind, seq) > std::tie(o.t_ms, o.kind, o.seq);
    }
};

// Turns message deliveries into scheduled reads.
class ReadScheduler final : public DeliverySink {
public:
    ReadScheduler(const std::map<std::string, std::size_t>& index, const ConvictionEstimator& estimator,
                  std::int64_t read_delay_ms)
        : index_(index), estimator_(estimator), read_delay_ms_(read_delay_ms) {}

    struct Read {
        std::int64_t t_ms;
        std::size_t participant;
        Option option;
    };

    void deliver(const std::string& recipient, const json& frame) override {
        if (frame.at("type") != "message") return;
        const auto who = index_.find(recipient);
        if (who == index_.end()) return;
        const auto& mj = frame.at("message");
        const auto id = mj.at("id").get<std::uint64_t>();
        if (id != cached_id_) {
            cached_id_ = id;
            const auto m = mj.get<Message>();
            cached_author_ = m.author;
            cached_t_ = m.t_ms;
            cached_option_.reset();
            if (m.relay_meta) {
                cached_option_ = m.relay_meta->option;
            } else {
                double best = 0.0;
                for (const auto& e : estimator_.estimate(m, kAllOptions))
                    if (e.strength > best) {
                        best = e.strength;
                        cached_option_ = e.option;
                    }
            }
        }
        if (!cached_option_ || recipient == cached_author_) return;
        pending.push_back({cached_t_ + read_delay_ms_, who->second, *cached_option_});
    }

    std::vector<Read> pending;

private:
    const std::map<std::string, std::size_t>& index_;
    const ConvictionEstimator& estimator_;
    std::int64_t read_delay_ms_;
    std::uint64_t cached_id_ = 0;
    std::string cached_author_;
    std::int64_t cached_t_ = 0;
    std::optional<Option> cached_option_;
};

}  // namespace

CsiRun run_csi(const Population& pop, const std::vector<Question>& questions, const SessionConfig& session,
               std::uint64_t seed) {
    SessionConfig config = session;
    config.roster = pop.roster();
    config.questions = questions;
    config.rng_seed = seed;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < pop.participants.size(); ++i) index[pop.participants[i].id] = i;

    auto estimator = std::make_shared<LexicalEstimator>();
    const auto read_delay_ms = static_cast<std::int64_t>(std::llround(pop.model.read_delay_s * 1000.0));
    ReadScheduler reads(index, *estimator, read_delay_ms);
    Session s("sim", config, estimator, std::make_shared<StubRelayBackend>(), &reads);

    CsiRun out;
    const auto cadence_ms = static_cast<std::int64_t>(std::llround(config.relay_cadence_s * 1000.0));
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        const auto& q = questions[qi];
        std::vector<OptionValues> beliefs;
        for (std::size_t i = 0; i < pop.participants.size(); ++i) beliefs.push_back(pop.initial_belief(i, q));

        s.open_question(q.id);
        const std::int64_t deadline = s.deadline_ms();
        std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue;
        std::uint64_t seq = 0;
        for (std::int64_t b = cadence_ms; cadence_ms > 0 && b < deadline; b += cadence_ms)
            queue.push({b, SimEvent::tick, seq++, 0, Option::A});

        std::vector<Rng> talk;
        for (std::size_t i = 0; i < pop.participants.size(); ++i) {
            talk.emplace_back(derive_seed(derive_seed(derive_seed(seed, 1), qi), i));
            const double rate_per_ms = pop.participants[i].talkativeness / 60000.0;
            double t = 0.0;
            while (true) {
                t += talk.back().exponential(rate_per_ms);
                if (t >= static_cast<double>(deadline)) break;
                queue.push({static_cast<std::int64_t>(t), SimEvent::post, seq++, i, Option::A});
            }
        }

        auto drain = [&] {
            for (const auto& r : reads.pending)
                if (r.t_ms < deadline) queue.push({r.t_ms, SimEvent::read, seq++, r.participant, r.option});
            reads.pending.clear();
        };

        while (!queue.empty()) {
            const SimEvent ev = queue.top();
            queue.pop();
            const auto& who = pop.participants[ev.participant];
            switch (ev.kind) {
                case SimEvent::tick:
                    s.advance(ev.t_ms);
                    break;
                case SimEvent::read: {
                    const double strength =
                        pop.model.base_strength + (ev.option == q.correct_option ? pop.model.truth_quality_bonus : 0.0);
                    persuade(beliefs[ev.participant], ev.option, strength, who.persuasibility,
                             pop.model.persuasion_rate);
                    break;
                }
                case SimEvent::post: {
                    auto& rng = talk[ev.participant];
                    const auto& r = reasons()[rng.index(reasons().size())];
                    const std::string text = "I vote " + to_string(modal(beliefs[ev.participant])) + " " + r;
                    s.post_message(who.id, text, ev.t_ms);
                    ++out.messages_posted;
                    break;
                }
            }
            drain();
        }
        const auto result = s.close_question();
        drain();
        out.relays += s.transcript(q.id)->propagation.size();
        out.selections.push_back(result);
    }

    std::size_t hits = 0;
    for (const auto& r : out.selections) hits += r.correct;
    out.accuracy = questions.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(questions.size());
    out.event_log = s.export_event_log();
    return out;
}

// ---------------------------------------------------------------------------
// Experiment

const MethodComparison& ExperimentSummary::comparison(const std::string& a, const std::string& b) const {
    for (const auto& c : comparisons)
        if (c.a == a && c.b == b) return c;
    throw Error(ErrorCode::InvalidArgument, "no comparison " + a + " vs " + b);
}

namespace {

MethodSummary summarize(std::string name, std::vector<double> per_run) {
    MethodSummary m;
    m.name = std::move(name);
    m.per_run = std::move(per_run);
    const auto n = static_cast<double>(m.per_run.size());
    m.mean_accuracy = std::accumulate(m.per_run.begin(), m.per_run.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : m.per_run) ss += (x - m.mean_accuracy) * (x - m.mean_accuracy);
    m.sd = m.per_run.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return m;
}

MethodComparison compare_methods(const MethodSummary& a, const MethodSummary& b) {
    MethodComparison c{a.name, b.name, std::nullopt, sign_test(a.per_run, b.per_run)};
    try {
        c.t_test = paired_t_test(a.per_run, b.per_run);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegeneratePairs && e.code() != ErrorCode::InvalidArgument) throw;
    }
    return c;
}

json method_json(const MethodSummary& m) {
    json j{{"name", m.name}, {"mean_accuracy", m.mean_accuracy}, {"sd", m.sd}, {"per_run", m.per_run}};
    j["iq"] = m.iq ? json(*m.iq) : json(nullptr);
    j["percentile"] = m.percentile ? json(*m.percentile) : json(nullptr);
    return j;
}

}  // namespace

ExperimentSummary compare(const ExperimentConfig& config) {
    if (config.n_runs < 1) throw Error(ErrorCode::InvalidArgument, "n_runs must be >= 1");
    if (config.questions.empty()) throw Error(ErrorCode::InvalidArgument, "no questions");
    const auto key = answer_key(config.questions);

    std::vector<double> ind_runs, woc_runs, csi_runs;
    std::vector<double> pooled_scores;
    std::map<std::string, double> ind_q, csi_q;
    double group_ties = 0.0, population_ties = 0.0;
    ExperimentSummary out;

    if (config.log_dir) std::filesystem::create_directories(*config.log_dir);

    for (int r = 0; r < config.n_runs; ++r) {
        const std::uint64_t run_seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
        SimModelConfig model = config.model;
        model.seed = run_seed;
        if (!model.question_seed) model.question_seed = config.seed;
        const auto pop = calibrate(model, config.questions);

        const auto matrix = run_individual(pop, config.questions, derive_seed(run_seed, 1));
        const auto scores = score_individuals(matrix, key);
        ind_runs.push_back(scores.distribution.mu);
        pooled_scores.insert(pooled_scores.end(), scores.fraction_correct.begin(), scores.fraction_correct.end());
        for (const auto& [qid, acc] : per_question_accuracy(matrix, key)) ind_q[qid] += acc;

        WocParams wp = config.woc;
        wp.seed = derive_seed(run_seed, 2);
        const auto woc = woc_bootstrap(matrix, key, wp);
        woc_runs.push_back(woc.overall);
        group_ties += woc.group_tie_rate;
        population_ties += woc.population_tie_rate;

        const auto csi = run_csi(pop, config.questions, config.session, derive_seed(run_seed, 3));
        csi_runs.push_back(csi.accuracy);
        for (const auto& sel : csi.selections) csi_q[sel.question_id] += sel.correct ? 1.0 : 0.0;

        if (config.log_dir) {
            const auto path = (std::filesystem::path(*config.log_dir) / ("run_" + std::to_string(r) + ".jsonl")).string();
            std::ofstream f(path, std::ios::binary);
            f << csi.event_log;
            if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
            out.event_log_paths.push_back(path);
        }
    }

    const double n = config.n_runs;
    out.n_runs = static_cast<std::size_t>(config.n_runs);
    out.individual = summarize("individual", ind_runs);
    out.woc = summarize("woc", woc_runs);
    out.csi = summarize("csi", csi_runs);
    out.woc_group_tie_rate = group_ties / n;
    out.woc_population_tie_rate = population_ties / n;

    auto& dist = out.individual_distribution;
    dist.n = pooled_scores.size();
    dist.mu = std::accumulate(pooled_scores.begin(), pooled_scores.end(), 0.0) / static_cast<double>(dist.n);
    double ss = 0.0;
    for (double x : pooled_scores) ss += (x - dist.mu) * (x - dist.mu);
    dist.sigma = std::sqrt(ss / static_cast<double>(dist.n));
    if (dist.sigma > 0)
        for (auto* m : {&out.individual, &out.woc, &out.csi}) {
            m->iq = iq_score(m->mean_accuracy, dist);
            m->percentile = percentile(*m->iq);
        }

    out.comparisons.push_back(compare_methods(out.csi, out.woc));
    out.comparisons.push_back(compare_methods(out.csi, out.individual));
    out.comparisons.push_back(compare_methods(out.woc, out.individual));

    for (auto& [qid, v] : ind_q) v /= n;
    for (auto& [qid, v] : csi_q) v /= n;
    out.difficulty = difficulty_curve(ind_q, csi_q);
    return out;
}

json to_json(const ExperimentSummary& s) {
    json comparisons = json::array();
    for (const auto& c : s.comparisons) {
        json j{{"a", c.a}, {"b", c.b}};
        j["sign_test"] = {{"wins", c.sign.wins}, {"losses", c.sign.losses}, {"ties", c.sign.ties}, {"p", c.sign.p}};
        if (c.t_test)
            j["t_test"] = {{"t", c.t_test->t}, {"p", c.t_test->p}, {"df", c.t_test->df},
                           {"mean_difference", c.t_test->mean_difference}};
        else
            j["t_test"] = nullptr;
        comparisons.push_back(std::move(j));
    }
    json rows = json::array();
    for (const auto& r : s.difficulty.rows)
        rows.push_back({{"question_id", r.question_id}, {"individual", r.individual}, {"csi", r.other}});
    return json{{"n_runs", s.n_runs},
                {"methods", {method_json(s.individual), method_json(s.woc), method_json(s.csi)}},
                {"comparisons", comparisons},
                {"individual_distribution",
                 {{"mu", s.individual_distribution.mu},
                  {"sigma", s.individual_distribution.sigma},
                  {"n", s.individual_distribution.n}}},
                {"difficulty",
                 {{"rows", rows},
                  {"hardest_count", s.difficulty.hardest_count},
                  {"hardest_individual_mean", s.difficulty.hardest_individual_mean},
                  {"hardest_csi_mean", s.difficulty.hardest_other_mean}}},
                {"woc_group_tie_rate", s.woc_group_tie_rate},
                {"woc_population_tie_rate", s.woc_population_tie_rate},
                {"event_log_paths", s.event_log_paths}};
}

std::vector<Question> synthetic_question_bank(int n, std::uint64_t seed) {
    std::vector<Question> out;
    const auto width = std::max<std::size_t>(2, std::to_string(n).size());
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        Question q;
        auto digits = std::to_string(i + 1);
        q.id = "q" + std::string(width - std::min(width, digits.size()), '0') + digits;
        q.prompt = "Pattern item " + std::to_string(i + 1) + ": choose the figure that completes the matrix";
        q.correct_option = kAllOptions[rng.index(kOptionCount)];
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace csi
