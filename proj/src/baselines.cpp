#include "csi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "csi/error.hpp"

namespace csi {

// ---------------------------------------------------------------------------
// IO

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ResponseMatrix parse_response_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "response CSV is empty");
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "respondent" || header[1] != "elapsed_s")
        throw Error(ErrorCode::ParseError, "header must start with respondent,elapsed_s");

    ResponseMatrix m;
    m.questions.assign(header.begin() + 2, header.end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw Error(ErrorCode::ParseError, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                                   " cells, expected " + std::to_string(header.size()));
        m.respondents.push_back(row[0]);
        if (row[1].empty()) {
            m.elapsed_s.push_back(std::nullopt);
        } else {
            try {
                m.elapsed_s.push_back(std::stod(row[1]));
            } catch (const std::exception&) {
                throw Error(ErrorCode::ParseError, "bad elapsed_s '" + row[1] + "'");
            }
        }
        std::vector<std::optional<Option>> choices;
        for (std::size_t c = 2; c < row.size(); ++c) {
            if (row[c].empty()) choices.push_back(std::nullopt);
            else choices.push_back(option_from_string(row[c]));
        }
        m.choice.push_back(std::move(choices));
    }
    return m;
}

ResponseMatrix load_response_csv(const std::string& path) { return parse_response_csv(read_file(path)); }

std::string to_csv(const ResponseMatrix& m) {
    std::ostringstream out;
    out << "respondent,elapsed_s";
    for (const auto& q : m.questions) out << ',' << q;
    out << '\n';
    for (std::size_t r = 0; r < m.respondents.size(); ++r) {
        out << m.respondents[r] << ',';
        if (m.elapsed_s[r]) out << *m.elapsed_s[r];
        for (const auto& c : m.choice[r]) {
            out << ',';
            if (c) out << to_char(*c);
        }
        out << '\n';
    }
    return out.str();
}

AnswerKey parse_answer_key(const json& doc) {
    if (doc.is_object() && doc.contains("questions") && doc.at("questions").is_array())
        return answer_key(parse_question_bank(doc));
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, "answer key must be a JSON object");
    AnswerKey key;
    for (const auto& [qid, label] : doc.items()) key[qid] = label.get<Option>();
    return key;
}

AnswerKey load_answer_key(const std::string& path) {
    try {
        return parse_answer_key(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

AnswerKey answer_key(const std::vector<Question>& questions) {
    AnswerKey key;
    for (const auto& q : questions) key[q.id] = q.correct_option;
    return key;
}

// ---------------------------------------------------------------------------
// Individual scoring

FilterResult filter_bad_actors(const ResponseMatrix& m, double min_elapsed_s) {
    FilterResult out;
    out.clean.questions = m.questions;
    for (std::size_t r = 0; r < m.size(); ++r) {
        bool flag = m.elapsed_s[r] && *m.elapsed_s[r] < min_elapsed_s;

        std::set<Option> distinct;
        std::size_t answered = 0;
        for (const auto& c : m.choice[r]) {
            if (!c) continue;
            distinct.insert(*c);
            ++answered;
        }
        if (answered >= 2 && distinct.size() == 1) flag = true;

        if (flag) {
            out.flagged.push_back(m.respondents[r]);
        } else {
            out.clean.respondents.push_back(m.respondents[r]);
            out.clean.choice.push_back(m.choice[r]);
            out.clean.elapsed_s.push_back(m.elapsed_s[r]);
        }
    }
    return out;
}

namespace {

std::vector<Option> key_for(const ResponseMatrix& m, const AnswerKey& key) {
    std::vector<Option> out;
    for (const auto& q : m.questions) {
        const auto it = key.find(q);
        if (it == key.end()) throw Error(ErrorCode::QuestionNotFound, "answer key has no entry for " + q);
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

IndividualScores score_individuals(const ResponseMatrix& m, const AnswerKey& key, Deviation deviation) {
    const auto correct = key_for(m, key);
    IndividualScores out;
    const auto nq = static_cast<double>(m.questions.size());
    for (std::size_t r = 0; r < m.size(); ++r) {
        std::size_t hits = 0;
        bool incomplete = false;
        for (std::size_t q = 0; q < m.questions.size(); ++q) {
            const auto& c = m.choice[r][q];
            if (!c) incomplete = true;
            else if (*c == correct[q]) ++hits;
        }
        if (incomplete) ++out.incomplete_respondents;
        out.fraction_correct.push_back(nq > 0 ? static_cast<double>(hits) / nq : 0.0);
    }

    auto& d = out.distribution;
    d.n = out.fraction_correct.size();
    if (d.n == 0) return out;
    d.mu = std::accumulate(out.fraction_correct.begin(), out.fraction_correct.end(), 0.0) / static_cast<double>(d.n);
    double ss = 0.0;
    for (double x : out.fraction_correct) ss += (x - d.mu) * (x - d.mu);
    const double denom = deviation == Deviation::population ? static_cast<double>(d.n) : static_cast<double>(d.n) - 1.0;
    d.sigma = denom > 0 ? std::sqrt(ss / denom) : 0.0;
    return out;
}

std::map<std::string, double> per_question_accuracy(const ResponseMatrix& m, const AnswerKey& key) {
    const auto correct = key_for(m, key);
    std::map<std::string, double> out;
    for (std::size_t q = 0; q < m.questions.size(); ++q) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < m.size(); ++r)
            if (m.choice[r][q] == correct[q]) ++hits;
        out[m.questions[q]] = m.size() ? static_cast<double>(hits) / static_cast<double>(m.size()) : 0.0;
    }
    return out;
}

double iq_score(double x, const ScoreDistribution& dist) {
    if (!(dist.sigma > 0)) throw Error(ErrorCode::DegenerateDistribution, "standard deviation is zero");
    return 100.0 + 15.0 * (x - dist.mu) / dist.sigma;
}

double percentile(double iq) {
    const double z = (iq - 100.0) / 15.0;
    return 50.0 * std::erfc(-z / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------
// Aggregation

PluralityResult plurality(std::span<const Option> votes, Rng& rng) {
    if (votes.empty()) throw Error(ErrorCode::NoVotes, "no votes to aggregate");
    std::array<int, kOptionCount> counts{};
    for (Option v : votes) ++counts[option_index(v)];
    const int top = *std::max_element(counts.begin(), counts.end());
    std::array<Option, kOptionCount> tied{};
    std::size_t n = 0;
    for (Option o : kAllOptions)
        if (counts[option_index(o)] == top) tied[n++] = o;
    if (n == 1) return {tied[0], false};
    return {tied[rng.index(n)], true};
}

WocResult woc_bootstrap(const ResponseMatrix& m, const AnswerKey& key, const WocParams& p) {
    if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "response matrix is empty");
    if (p.n_groups < 1 || p.group_size_low < 1 || p.group_size_high < p.group_size_low || p.reps < 1)
        throw Error(ErrorCode::InvalidArgument, "bad bootstrap parameters");
    const auto correct = key_for(m, key);
    const std::size_t nq = m.questions.size();
    const std::size_t nr = m.size();

    WocResult out;
    out.questions = m.questions;
    out.per_question_accuracy.assign(nq, 0.0);
    out.rep_accuracy.reserve(static_cast<std::size_t>(p.reps));

    std::size_t group_answers = 0, group_ties = 0, population_answers = 0, population_ties = 0;
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(p.n_groups));
    std::vector<Option> votes, group_votes;

    for (int rep = 0; rep < p.reps; ++rep) {
        Rng rng(derive_seed(p.seed, static_cast<std::uint64_t>(rep)));
        for (auto& g : groups) {
            const auto size = static_cast<std::size_t>(rng.between(p.group_size_low, p.group_size_high));
            g.resize(size);
            for (auto& member : g) member = rng.index(nr);
        }
        std::size_t hits = 0;
        for (std::size_t q = 0; q < nq; ++q) {
            group_votes.clear();
            for (const auto& g : groups) {
                votes.clear();
                for (auto member : g)
                    if (const auto& c = m.choice[member][q]) votes.push_back(*c);
                if (votes.empty()) continue;
                const auto res = plurality(votes, rng);
                ++group_answers;
                group_ties += res.tie;
                group_votes.push_back(res.option);
            }
            if (group_votes.empty()) continue;
            const auto res = plurality(group_votes, rng);
            ++population_answers;
            population_ties += res.tie;
            if (res.option == correct[q]) {
                ++hits;
                out.per_question_accuracy[q] += 1.0;
            }
        }
        out.rep_accuracy.push_back(nq ? static_cast<double>(hits) / static_cast<double>(nq) : 0.0);
    }

    const double reps = p.reps;
    for (auto& a : out.per_question_accuracy) a /= reps;
    out.overall = std::accumulate(out.rep_accuracy.begin(), out.rep_accuracy.end(), 0.0) / reps;
    double ss = 0.0;
    for (double a : out.rep_accuracy) ss += (a - out.overall) * (a - out.overall);
    out.overall_stderr = p.reps > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0;
    out.group_tie_rate = group_answers ? static_cast<double>(group_ties) / static_cast<double>(group_answers) : 0.0;
    out.population_tie_rate =
        population_answers ? static_cast<double>(population_ties) / static_cast<double>(population_answers) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Significance tests

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
    if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two pairs");
    const auto n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; }))
        throw Error(ErrorCode::DegeneratePairs, "all paired differences are zero");

    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);

    TTestResult out;
    out.df = static_cast<int>(a.size()) - 1;
    out.mean_difference = mean;
    if (se == 0.0) {
        out.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        out.p = 0.0;
        return out;
    }
    out.t = mean / se;
    out.p = incomplete_beta(out.df / 2.0, 0.5, out.df / (out.df + out.t * out.t));
    return out;
}

SignTestResult sign_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
    SignTestResult out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) ++out.wins;
        else if (a[i] < b[i]) ++out.losses;
        else ++out.ties;
    }
    const int n = out.wins + out.losses;
    if (n == 0) return out;
    const int k = std::min(out.wins, out.losses);
    // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space.
    double tail = 0.0;
    for (int i = 0; i <= k; ++i)
        tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
    out.p = std::min(1.0, 2.0 * tail);
    return out;
}

// ---------------------------------------------------------------------------
// Difficulty

DifficultyCurve difficulty_curve(const std::map<std::string, double>& individual,
                                 const std::map<std::string, double>& other) {
    if (individual.size() != other.size())
        throw Error(ErrorCode::QuestionMismatch, "methods cover different question sets");
    DifficultyCurve out;
    for (const auto& [qid, acc] : individual) {
        const auto it = other.find(qid);
        if (it == other.end()) throw Error(ErrorCode::QuestionMismatch, "question " + qid + " missing");
        out.rows.push_back({qid, acc, it->second});
    }
    std::stable_sort(out.rows.begin(), out.rows.end(),
                     [](const DifficultyRow& a, const DifficultyRow& b) { return a.individual > b.individual; });
    if (out.rows.empty()) return out;

    out.hardest_count = std::max<std::size_t>(1, out.rows.size() / 2);
    const auto first = out.rows.end() - static_cast<std::ptrdiff_t>(out.hardest_count);
    double si = 0.0, so = 0.0;
    for (auto it = first; it != out.rows.end(); ++it) {
        si += it->individual;
        so += it->other;
    }
    out.hardest_individual_mean = si / static_cast<double>(out.hardest_count);
    out.hardest_other_mean = so / static_cast<double>(out.hardest_count);
    return out;
}

}  // namespace csi
