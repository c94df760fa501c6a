#include "georl/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <regex>

#include <json.hpp>

#include "georl/latex_math.hpp"
#include "georl/reward.hpp"

namespace georl {

using ojson = nlohmann::ordered_json;

double mra(double p, double t) {
    if (t == 0.0) throw ZeroTarget("mra: target is zero");
    const double rel = std::abs(p - t) / std::abs(t);
    int passed = 0;
    for (double tol : kMraTolerances) passed += rel < tol;
    return passed / 10.0;
}

std::vector<Prediction> read_predictions(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = ojson::parse(line);
            out.push_back({j.at("id").get<std::string>(), j.at("raw_text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw DataError("predictions line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return read_predictions(in);
}

std::map<std::string, std::string> read_task_map_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    try {
        return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::optional<double> last_number(std::string_view text) {
    static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
    std::optional<double> last;
    for (std::cregex_iterator it(text.data(), text.data() + text.size(), number), end; it != end; ++it) {
        std::string s = it->str();
        if (!s.empty() && s.front() == '+') s.erase(0, 1);
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && p == s.data() + s.size() && std::isfinite(v)) last = v;
    }
    return last;
}

namespace {

struct ItemScore {
    double score = 0.0;
    bool answered = false;
    bool zero_target = false;
};

ItemScore score_item(const std::string& raw, const Answer& gold, const EvalOptions& opts) {
    ItemScore out;
    const auto ex = extract_final_answer(raw);
    switch (gold.kind()) {
        case AnswerKind::Numeric: {
            std::optional<double> value;
            if (ex) value = payload_value(ex->payload);
            else if (opts.lenient) value = last_number(raw);
            if (!value) return out;
            out.answered = true;
            if (gold.value() == 0.0) {
                out.zero_target = true;
                return out;
            }
            out.score = mra(*value, gold.value());
            return out;
        }
        case AnswerKind::MultipleChoice: {
            if (!ex) return out;
            out.answered = true;
            const auto letter = payload_choice(ex->payload);
            out.score = letter && *letter == gold.choice() ? 1.0 : 0.0;
            return out;
        }
        case AnswerKind::Expression: {
            if (!ex) return out;
            out.answered = true;
            out.score = score_response(raw, gold, RewardConfig{}).answer_reward;
            return out;
        }
    }
    return out;
}

}  // namespace

EvalReport evaluate_predictions(const std::vector<Prediction>& predictions, const std::vector<Instance>& gold,
                                const std::map<std::string, std::string>& task_map, const EvalOptions& opts) {
    EvalReport report;
    std::map<std::string, const Instance*> by_id;
    for (const auto& inst : gold) by_id.emplace(inst.id, &inst);

    std::map<std::string, const Prediction*> latest;
    for (const auto& p : predictions) {
        if (!by_id.count(p.id)) throw UnknownId("prediction id " + p.id + " is not in the gold corpus");
        auto [it, fresh] = latest.emplace(p.id, &p);
        if (!fresh) {
            report.warnings.push_back("duplicate prediction for " + p.id + "; the last one wins");
            it->second = &p;
        }
    }

    std::map<std::string, double> sums;
    for (const auto& inst : gold) {
        auto task = task_map.find(inst.id);
        if (task == task_map.end()) throw DataError("gold id " + inst.id + " has no task");
        ++report.counts[task->second];
        double& sum = sums[task->second];
        auto pred = latest.find(inst.id);
        if (pred == latest.end()) {
            ++report.unanswered;
            continue;
        }
        const ItemScore s = score_item(pred->second->raw_text, inst.answer, opts);
        if (!s.answered) ++report.unanswered;
        if (s.zero_target) {
            ++report.zero_targets;
            report.warnings.push_back("gold " + inst.id + " has a zero numeric target; scored 0");
        }
        sum += s.score;
    }
    double total = 0.0;
    for (const auto& [task, n] : report.counts) {
        report.per_task[task] = sums[task] / static_cast<double>(n);
        total += report.per_task[task];
    }
    if (!report.counts.empty()) report.overall = total / static_cast<double>(report.counts.size());
    return report;
}

std::string report_json(const EvalReport& report) {
    ojson j;
    j["per_task"] = ojson::object();
    for (const auto& [task, score] : report.per_task) j["per_task"][task] = score;
    j["overall"] = report.overall;
    j["counts"] = ojson::object();
    for (const auto& [task, n] : report.counts) j["counts"][task] = n;
    j["unanswered"] = report.unanswered;
    j["zero_targets"] = report.zero_targets;
    return j.dump(2) + "\n";
}

}  // namespace georl
