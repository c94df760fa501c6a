#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "georl/core_model.hpp"
#include "georl/curation.hpp"
#include "georl/da_bound.hpp"
#include "georl/eval.hpp"
#include "georl/latex_math.hpp"
#include "georl/reward.hpp"
#include "georl/toy_policy.hpp"

#ifndef GEORL_VERSION
#define GEORL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace georl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Raised for argument combinations CLI11 cannot express; maps to exit 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Structured log lines on stderr.
class Logger {
public:
    Level level = Level::Warn;
    bool json = false;

    void log(Level lvl, const std::string& msg) const {
        if (lvl > level) return;
        static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
        const char* name = kNames[static_cast<int>(lvl)];
        if (json) std::cerr << nlohmann::json{{"level", name}, {"msg", msg}}.dump() << '\n';
        else std::cerr << name << ": " << msg << '\n';
    }
    void error(const std::string& m) const { log(Level::Error, m); }
    void warn(const std::string& m) const { log(Level::Warn, m); }
    void info(const std::string& m) const { log(Level::Info, m); }
};

struct Global {
    std::uint64_t seed = 1;
    std::string threads = "1";
    std::string log_level = "warn";
    bool json = false;
    Logger logger;

    unsigned thread_count() const {
        if (threads == "auto") return 0;
        try {
            std::size_t used = 0;
            const long v = std::stol(threads, &used);
            if (used == threads.size() && v >= 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw UsageError("--threads must be a non-negative integer or 'auto', got '" + threads + "'");
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string corpus_text(const std::vector<Instance>& corpus) {
    std::ostringstream out;
    write_corpus(out, corpus);
    return out.str();
}

// ---- curate ----

struct CurateArgs {
    std::string in;
    std::string out;
    std::string report;
    int dedup_threshold = 5;
    bool no_llm = false;
};

// A directory contributes every *.jsonl file in name order; images resolve against it.
std::vector<Instance> read_curate_input(const std::string& in, std::string& image_root) {
    if (fs::is_directory(in)) {
        image_root = in;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(in))
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw DataError(in + ": no .jsonl files");
        std::vector<Instance> all;
        for (const auto& f : files) {
            auto part = read_corpus_file(f.string());
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    image_root = fs::path(in).parent_path().string();
    if (image_root.empty()) image_root = ".";
    return read_corpus_file(in);
}

int run_curate(const CurateArgs& a, const Global& g) {
    CurationOptions opts;
    opts.dedup_threshold = a.dedup_threshold;
    opts.threads = g.thread_count();
    const auto input = read_curate_input(a.in, opts.image_root);
    if (const auto problems = validate_corpus(input, false); !problems.empty()) throw DataError(problems.front());

    RuleBasedSplitter rule_splitter;
    RuleBasedFormatter rule_formatter;
    std::unique_ptr<HttpTextService> service;
    if (!a.no_llm) {
        if (auto ep = ServiceEndpoint::from_environment()) {
            service = std::make_unique<HttpTextService>(*ep);
            g.logger.info("using text service at " + ep->url);
        } else {
            g.logger.info("CURATE_LLM_URL unset; using rule-based splitter and formatter");
        }
    }
    ExternalSplitter& splitter = service ? static_cast<ExternalSplitter&>(*service) : rule_splitter;
    ExternalFormatter& formatter = service ? static_cast<ExternalFormatter&>(*service) : rule_formatter;

    const CurationResult result = run_curation(input, splitter, formatter, opts);
    for (const auto& line : result.report.log) g.logger.info(line);
    write_file(a.out, corpus_text(result.corpus));
    if (!a.report.empty()) write_file(a.report, curation_report_json(result.report) + "\n");
    g.logger.info(std::to_string(result.report.input_count) + " in, " + std::to_string(result.report.output_count) +
                  " out");
    return 0;
}

// ---- score ----

struct ScoreArgs {
    std::string pred;
    std::string gold;
    std::string out;
    double numeric_band = 0.01;
    double format_weight = 0.1;
    bool no_think_required = false;
};

int run_score(const ScoreArgs& a, const Global& g) {
    RewardConfig cfg;
    cfg.numeric_band = a.numeric_band;
    cfg.format_weight = a.format_weight;
    cfg.require_think_tags = !a.no_think_required;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto preds = read_predictions_file(a.pred);
    const auto gold = read_corpus_file(a.gold);

    std::map<std::string, std::size_t> pred_index;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (!pred_index.emplace(preds[i].id, i).second) throw DataError("duplicate prediction id '" + preds[i].id + "'");
    std::set<std::string> gold_ids;
    for (const auto& inst : gold) gold_ids.insert(inst.id);
    for (const auto& inst : gold)
        if (!pred_index.contains(inst.id)) throw DataError("missing prediction for id '" + inst.id + "'");
    for (const auto& p : preds)
        if (!gold_ids.contains(p.id)) throw UnknownId("prediction id '" + p.id + "' not in gold");

    std::vector<std::string> texts;
    std::vector<Answer> answers;
    for (const auto& inst : gold) {
        texts.push_back(preds[pred_index.at(inst.id)].raw_text);
        answers.push_back(inst.answer);
    }
    const auto scores = score_batch(texts, answers, cfg, g.thread_count());
    std::string out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const RewardBreakdown& b = scores[i];
        nlohmann::ordered_json j;
        j["id"] = gold[i].id;
        j["format_reward"] = b.format_reward;
        j["answer_reward"] = b.answer_reward;
        j["total"] = b.total;
        j["rule_fired"] = to_string(b.rule_fired);
        j["fallback_used"] = b.fallback_used;
        out += j.dump() + "\n";
    }
    write_file(a.out, out);
    return 0;
}

// ---- eval ----

struct EvalArgs {
    std::string pred;
    std::string gold;
    std::string tasks;
    std::string out;
    bool lenient = false;
};

int run_eval(const EvalArgs& a, const Global& g) {
    EvalOptions opts;
    opts.lenient = a.lenient;
    const EvalReport report = evaluate_predictions(read_predictions_file(a.pred), read_corpus_file(a.gold),
                                                   read_task_map_file(a.tasks), opts);
    for (const auto& w : report.warnings) g.logger.warn(w);
    write_file(a.out, report_json(report) + "\n");
    return 0;
}

// ---- train-sim ----

struct TrainArgs {
    std::string task;
    std::string out;
    int iterations = -1;
};

int run_train(const TrainArgs& a, const Global& g, bool seed_given, bool threads_given) {
    SimTask task = a.task.empty() ? default_sim_task() : sim_task_from_json(read_file(a.task));
    if (seed_given || a.task.empty()) task.seed = g.seed;
    if (threads_given || a.task.empty()) task.threads = g.thread_count();
    if (a.iterations >= 0) task.iterations = a.iterations;
    const TrainingResult result = run_training(task);
    write_file(a.out, curve_csv(result.curve));
    if (!result.curve.empty())
        g.logger.info("final mean_reward " + format_double(result.curve.back().mean_reward) + ", " +
                      std::to_string(result.underfilled_iterations) + " underfilled iterations");
    return 0;
}

// ---- expr-eq ----

int run_expr_eq(const std::string& lhs, const std::string& rhs, const Global& g) {
    const auto parse = [](const std::string& src) {
        try {
            return latex::parse_latex(src);
        } catch (const latex::ParseError& e) {
            throw DataError("cannot parse '" + src + "': " + e.what());
        }
    };
    const latex::MathExpr a = parse(lhs), b = parse(rhs);
    latex::EquivalenceOptions opts;
    opts.seed = g.seed;
    const auto eq = latex::symbolically_equal(a, b, opts);
    if (eq.fallback_used) g.logger.info("decided by numeric sampling");
    std::cout << (eq.equal ? "equal" : "not equal") << '\n';
    return 0;
}

// ---- dabound ----

struct DaArgs {
    int trials = 1000;
    int max_space = 6;
    int max_class = 64;
};

int run_dabound(const DaArgs& a, const Global& g) {
    if (a.trials < 1 || a.max_space < 2 || a.max_class < 1 || a.max_class > kMaxHypotheses)
        throw UsageError("dabound: need trials >= 1, max-space >= 2, 1 <= max-class <= " + std::to_string(kMaxHypotheses));
    std::mt19937_64 rng(g.seed);
    int holds = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    double max_hdh = 0.0, sum_hdh = 0.0;
    int worst_trial = 0;
    for (int t = 0; t < a.trials; ++t) {
        const FiniteSetup setup = random_setup(rng, a.max_space, a.max_class);
        const BoundReport r = verify_bound(setup);
        holds += r.holds;
        if (r.worst_slack < min_slack) {
            min_slack = r.worst_slack;
            worst_trial = t;
        }
        max_hdh = std::max(max_hdh, r.hdh);
        sum_hdh += r.hdh;
    }
    std::cout << "trials       " << a.trials << '\n'
              << "holds        " << holds << '\n'
              << "violations   " << a.trials - holds << '\n'
              << "min_slack    " << format_double(min_slack) << " (trial " << worst_trial << ")\n"
              << "mean_hdh     " << format_double(sum_hdh / a.trials) << '\n'
              << "max_hdh      " << format_double(max_hdh) << '\n';
    return holds == a.trials ? 0 : kExitData;
}

// ---- stats ----

int run_stats(const std::string& in, const std::string& out) {
    const std::string json = corpus_stats_json(compute_stats(read_corpus_file(in))) + "\n";
    if (out.empty()) std::cout << json;
    else write_file(out, json);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometry RL-with-verifiable-rewards toolkit", "georl"};
    app.set_version_flag("--version", "georl " GEORL_VERSION);
    app.set_config("--config", "", "TOML file of option defaults; command-line flags take precedence");
    app.require_subcommand(1);

    Global g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    auto* threads_opt =
        app.add_option("--threads", g.threads, "Worker threads: a count, 0 or 'auto' for one per core")->capture_default_str();
    app.add_option("--log-level", g.log_level, "Log verbosity on stderr")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
        ->capture_default_str();
    app.add_flag("--json", g.json, "Emit stderr logs as JSON lines");

    CurateArgs curate;
    auto* c = app.add_subcommand("curate", "Dedup, split and normalize a corpus");
    c->add_option("--in", curate.in, "Corpus JSONL file or directory of JSONL files")->required();
    c->add_option("--out", curate.out, "Output corpus JSONL")->required();
    c->add_option("--dedup-threshold", curate.dedup_threshold, "Hamming distance for duplicate images")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();
    c->add_flag("--no-llm", curate.no_llm, "Use only the rule-based splitter and formatter");
    c->add_option("--report", curate.report, "Curation report JSON");

    ScoreArgs score;
    auto* s = app.add_subcommand("score", "Reward breakdown per prediction");
    s->add_option("--pred", score.pred, "Predictions JSONL {id, raw_text}")->required();
    s->add_option("--gold", score.gold, "Gold corpus JSONL")->required();
    s->add_option("--out", score.out, "Breakdown JSONL")->required();
    s->add_option("--numeric-band", score.numeric_band, "Relative band for numeric answers")->capture_default_str();
    s->add_option("--format-weight", score.format_weight, "Weight of the format reward")->capture_default_str();
    s->add_flag("--no-think-required", score.no_think_required, "Grant the format reward without think tags");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Benchmark report over prediction files");
    e->add_option("--pred", ev.pred, "Predictions JSONL {id, raw_text}")->required();
    e->add_option("--gold", ev.gold, "Gold corpus JSONL")->required();
    e->add_option("--tasks", ev.tasks, "JSON object mapping id to task")->required();
    e->add_option("--out", ev.out, "Report JSON")->required();
    e->add_flag("--lenient", ev.lenient, "Use the last number when a numeric prediction has no box");

    TrainArgs train;
    auto* t = app.add_subcommand("train-sim", "Train the toy policy and write its learning curve");
    t->add_option("--task", train.task, "Sim task JSON; the built-in 4-prompt task when omitted");
    t->add_option("--out", train.out, "Learning-curve CSV")->required();
    t->add_option("--iterations", train.iterations, "Override the task's iteration count")->check(CLI::NonNegativeNumber);

    std::string lhs, rhs;
    auto* x = app.add_subcommand("expr-eq", "Symbolic equivalence of two LaTeX expressions");
    x->add_option("lhs", lhs, "First expression")->required();
    x->add_option("rhs", rhs, "Second expression")->required();

    DaArgs da;
    auto* d = app.add_subcommand("dabound", "Check the domain-adaptation bound on random finite setups");
    d->add_option("--trials", da.trials, "Number of random setups")->capture_default_str();
    d->add_option("--max-space", da.max_space, "Largest sample space")->capture_default_str();
    d->add_option("--max-class", da.max_class, "Largest hypothesis class")->capture_default_str();

    std::string stats_in, stats_out;
    auto* st = app.add_subcommand("stats", "Corpus statistics");
    st->add_option("--in", stats_in, "Corpus JSONL")->required();
    st->add_option("--out", stats_out, "Stats JSON; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    static const std::map<std::string, Level> kLevels = {
        {"error", Level::Error}, {"warn", Level::Warn}, {"info", Level::Info}, {"debug", Level::Debug}};
    g.logger.level = kLevels.at(g.log_level);
    g.logger.json = g.json;

    try {
        if (*c) return run_curate(curate, g);
        if (*s) return run_score(score, g);
        if (*e) return run_eval(ev, g);
        if (*t) return run_train(train, g, seed_opt->count() > 0, threads_opt->count() > 0);
        if (*x) return run_expr_eq(lhs, rhs, g);
        if (*d) return run_dabound(da, g);
        if (*st) return run_stats(stats_in, stats_out);
    } catch (const UsageError& ex) {
        g.logger.error(ex.what());
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        g.logger.error(ex.what());
        return kExitUsage;
    } catch (const std::exception& ex) {
        g.logger.error(ex.what());
        return kExitData;
    }
    return kExitUsage;
}
