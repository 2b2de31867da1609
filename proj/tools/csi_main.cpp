// csi: command-line front end for scoring, aggregation, simulation, replay and serving.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "csi/baselines.hpp"
#include "csi/error.hpp"
#include "csi/event_log.hpp"
#include "csi/orchestrator.hpp"
#include "csi/server.hpp"
#include "csi/sim.hpp"

using namespace csi;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One score per line; with commas, the last field is the score. A
// non-numeric first line is taken as a header.
std::vector<double> read_scores(const std::string& path) {
    std::istringstream in(slurp(path));
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto comma = line.rfind(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
            if (!first) throw Error(ErrorCode::ParseError, path + ": bad score '" + cell + "'");
        }
        first = false;
    }
    return out;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conversational swarm deliberation engine"};
    app.require_subcommand(1);

    // score
    auto* score = app.add_subcommand("score", "IQ and percentile of a fraction-correct score, or score a response file");
    double x = 0, mu = 0, sigma = 0;
    std::string responses, key_path;
    bool sample_sd = false, filter = false;
    score->add_option("--x", x, "fraction correct");
    score->add_option("--mu", mu, "reference mean");
    score->add_option("--sigma", sigma, "reference standard deviation");
    score->add_option("--responses", responses, "response matrix CSV");
    score->add_option("--key", key_path, "answer key or question bank JSON");
    score->add_flag("--sample-sd", sample_sd, "use the sample (n-1) standard deviation");
    score->add_flag("--filter", filter, "drop respondents flagged as bad actors first");

    // woc
    auto* woc = app.add_subcommand("woc", "bootstrap wisdom-of-crowd aggregation");
    WocParams wp;
    woc->add_option("--responses", responses, "response matrix CSV")->required();
    woc->add_option("--key", key_path, "answer key or question bank JSON")->required();
    woc->add_option("--groups", wp.n_groups, "groups per rep");
    woc->add_option("--group-min", wp.group_size_low, "smallest group");
    woc->add_option("--group-max", wp.group_size_high, "largest group");
    woc->add_option("--reps", wp.reps, "bootstrap reps");
    woc->add_option("--seed", wp.seed, "rng seed");
    woc->add_flag("--filter", filter, "drop respondents flagged as bad actors first");

    // ttest
    auto* ttest = app.add_subcommand("ttest", "paired t-test and sign test over per-question scores");
    std::string a_path, b_path;
    ttest->add_option("--a", a_path, "scores of method a")->required();
    ttest->add_option("--b", b_path, "scores of method b")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the individual / WoC / CSI comparison");
    ExperimentConfig ec;
    std::string questions_path, out_path = "results.json", model_path, logs_dir;
    int n_questions = 36;
    bool no_relays = false;
    simulate->add_option("--participants", ec.model.population, "synthetic participants");
    simulate->add_option("--questions", questions_path, "question bank JSON (default: synthetic bank)");
    simulate->add_option("--n-questions", n_questions, "size of the synthetic bank");
    simulate->add_option("--runs", ec.n_runs, "seeded runs");
    simulate->add_option("--seed", ec.seed, "experiment seed");
    simulate->add_option("--out", out_path, "summary JSON path");
    simulate->add_option("--model", model_path, "JSON overrides for the participant model");
    simulate->add_option("--bonus", ec.model.truth_quality_bonus, "truth_quality_bonus");
    simulate->add_option("--woc-reps", ec.woc.reps, "bootstrap reps per run");
    simulate->add_option("--logs", logs_dir, "directory for per-run event logs (default: <out>.logs)");
    simulate->add_flag("--no-relays", no_relays, "disable agent relays (ablation)");

    // serve
    auto* serve = app.add_subcommand("serve", "REST + WebSocket server");
    ServerOptions so;
    serve->add_option("--host", so.address, "bind address");
    serve->add_option("--port", so.port, "port");

    // replay
    auto* replay = app.add_subcommand("replay", "rebuild outcomes from an event log");
    std::string log_path;
    replay->add_option("--log", log_path, "JSONL event log")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (score->parsed()) {
            if (!responses.empty()) {
                if (key_path.empty()) throw Error(ErrorCode::InvalidArgument, "--responses needs --key");
                auto m = load_response_csv(responses);
                json flagged = json::array();
                if (filter) {
                    auto f = filter_bad_actors(m);
                    m = std::move(f.clean);
                    flagged = f.flagged;
                }
                const auto s = score_individuals(m, load_answer_key(key_path),
                                                 sample_sd ? Deviation::sample : Deviation::population);
                json per = json::object();
                for (std::size_t r = 0; r < m.size(); ++r) {
                    json row{{"fraction_correct", s.fraction_correct[r]}};
                    if (s.distribution.sigma > 0) row["iq"] = iq_score(s.fraction_correct[r], s.distribution);
                    per[m.respondents[r]] = row;
                }
                print({{"mu", s.distribution.mu},
                       {"sigma", s.distribution.sigma},
                       {"n", s.distribution.n},
                       {"incomplete_respondents", s.incomplete_respondents},
                       {"flagged", flagged},
                       {"respondents", per}});
            } else {
                const double iq = iq_score(x, {mu, sigma, 0});
                print({{"iq", iq}, {"percentile", percentile(iq)}});
            }
        } else if (woc->parsed()) {
            auto m = load_response_csv(responses);
            json flagged = json::array();
            if (filter) {
                auto f = filter_bad_actors(m);
                m = std::move(f.clean);
                flagged = f.flagged;
            }
            const auto r = woc_bootstrap(m, load_answer_key(key_path), wp);
            json per = json::object();
            for (std::size_t q = 0; q < r.questions.size(); ++q) per[r.questions[q]] = r.per_question_accuracy[q];
            print({{"overall", r.overall},
                   {"overall_stderr", r.overall_stderr},
                   {"per_question", per},
                   {"group_tie_rate", r.group_tie_rate},
                   {"population_tie_rate", r.population_tie_rate},
                   {"flagged", flagged}});
        } else if (ttest->parsed()) {
            const auto a = read_scores(a_path), b = read_scores(b_path);
            const auto t = paired_t_test(a, b);
            const auto s = sign_test(a, b);
            print({{"t", t.t},
                   {"p", t.p},
                   {"df", t.df},
                   {"mean_difference", t.mean_difference},
                   {"sign_test", {{"wins", s.wins}, {"losses", s.losses}, {"ties", s.ties}, {"p", s.p}}}});
        } else if (simulate->parsed()) {
            if (!model_path.empty()) {
                const int population = ec.model.population;
                ec.model = json::parse(slurp(model_path)).get<SimModelConfig>();
                if (simulate->count("--participants")) ec.model.population = population;
            }
            ec.questions = questions_path.empty() ? synthetic_question_bank(n_questions, ec.seed)
                                                  : load_question_bank(questions_path);
            ec.session.relays_enabled = !no_relays;
            ec.log_dir = logs_dir.empty() ? out_path + ".logs" : logs_dir;
            const auto summary = compare(ec);
            json out = to_json(summary);
            out["model"] = ec.model;
            out["relays_enabled"] = !no_relays;
            out["seed"] = ec.seed;
            std::ofstream f(out_path, std::ios::binary);
            f << out.dump(2) << '\n';
            if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + out_path);
            std::cout << "individual " << summary.individual.mean_accuracy << "  woc " << summary.woc.mean_accuracy
                      << "  csi " << summary.csi.mean_accuracy << "  -> " << out_path << '\n';
        } else if (serve->parsed()) {
            Server server(so);
            std::cout << "listening on " << so.address << ':' << server.port() << std::endl;
            server.run();
        } else if (replay->parsed()) {
            const auto log = EventLog::from_jsonl(slurp(log_path));
            const auto r = replay_event_log(log, LexicalEstimator{});
            json qs = json::array();
            for (const auto& q : r.questions) {
                qs.push_back({{"question_id", q.transcript.question.id},
                              {"selection", q.outcome.selection},
                              {"correct", q.outcome.correct},
                              {"matches_log", q.logged_selection && *q.logged_selection == q.outcome.selection},
                              {"messages", q.transcript.messages.size()},
                              {"propagation_events", q.transcript.propagation.size()}});
            }
            print({{"session_id", r.session_id}, {"questions", qs}});
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
