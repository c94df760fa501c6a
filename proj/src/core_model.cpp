#include "georl/core_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "georl/latex_math.hpp"

namespace georl {

using ojson = nlohmann::ordered_json;

Answer Answer::expression(std::string latex, bool unverified) {
    Answer a;
    a.kind_ = AnswerKind::Expression;
    a.expression_ = std::move(latex);
    a.unverified_ = unverified;
    return a;
}

Answer Answer::numeric(double value) {
    Answer a;
    a.kind_ = AnswerKind::Numeric;
    a.value_ = value;
    return a;
}

Answer Answer::choice(char label) {
    Answer a;
    a.kind_ = AnswerKind::MultipleChoice;
    a.choice_ = label;
    return a;
}

Answer Answer::with_unverified(bool flag) const {
    Answer a = *this;
    a.unverified_ = flag;
    return a;
}

std::string Answer::text() const {
    switch (kind_) {
        case AnswerKind::Expression: return expression_;
        case AnswerKind::Numeric: return format_double(value_);
        case AnswerKind::MultipleChoice: return std::string(1, choice_);
    }
    return {};
}

bool operator==(const Answer& a, const Answer& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
        case AnswerKind::Expression:
            return a.expression_ == b.expression_ && a.unverified_ == b.unverified_;
        case AnswerKind::Numeric: return a.value_ == b.value_;
        case AnswerKind::MultipleChoice: return a.choice_ == b.choice_;
    }
    return false;
}

std::vector<std::string> validate_instance(const Instance& inst, bool check_grammar) {
    std::vector<std::string> out;
    if (inst.id.empty()) out.emplace_back("id: empty");
    if (inst.images.empty()) {
        out.emplace_back("images: empty, at least 1 required");
    } else if (inst.images.size() > kMaxImagesPerInstance) {
        out.push_back("images: length " + std::to_string(inst.images.size()) + " exceeds " +
                      std::to_string(kMaxImagesPerInstance));
    }
    for (std::size_t i = 0; i < inst.images.size(); ++i) {
        if (inst.images[i].path.empty()) out.push_back("images[" + std::to_string(i) + "].path: empty");
    }
    if (inst.problem.empty()) out.emplace_back("problem: empty");

    const Answer& a = inst.answer;
    switch (a.kind()) {
        case AnswerKind::Expression:
            if (a.expression().empty()) {
                out.emplace_back("answer: empty expression");
            } else if (check_grammar && !a.unverified()) {
                try {
                    latex::parse_latex(a.expression());
                } catch (const latex::ParseError& e) {
                    out.push_back(std::string("answer: expression does not parse and is not flagged unverified (") +
                                  e.what() + ")");
                }
            }
            break;
        case AnswerKind::Numeric:
            if (!std::isfinite(a.value())) out.emplace_back("answer: non-finite numeric value");
            break;
        case AnswerKind::MultipleChoice:
            if (a.choice() < 'A' || a.choice() > 'H')
                out.push_back(std::string("answer: choice label '") + a.choice() + "' outside A-H");
            break;
    }
    return out;
}

std::vector<std::string> validate_response(const ModelResponse& r) {
    std::vector<std::string> out;
    const auto n = r.length();
    auto check = [&](const Eigen::VectorXd& v, const char* name) {
        if (v.size() != n) {
            out.push_back(std::string(name) + ": length " + std::to_string(v.size()) +
                          " differs from token count " + std::to_string(n));
            return;
        }
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || v[i] > 0.0) {
                out.push_back(std::string(name) + "[" + std::to_string(i) + "]: not a finite log-probability");
                return;
            }
        }
    };
    check(r.logprobs_new, "logprobs_new");
    check(r.logprobs_old, "logprobs_old");
    check(r.logprobs_ref, "logprobs_ref");
    return out;
}

std::vector<std::string> validate_group(const RolloutGroup& g) {
    std::vector<std::string> out;
    if (g.size() < 2) out.emplace_back("responses: group size below 2");
    if (g.rewards.size() != g.size()) out.emplace_back("rewards: length differs from responses");
    if (g.advantages) {
        const Eigen::VectorXd& adv = *g.advantages;
        if (adv.size() != g.size()) {
            out.emplace_back("advantages: length differs from responses");
        } else if (adv.size() > 0) {
            const double mean = adv.mean();
            if (std::abs(mean) > 1e-9) out.emplace_back("advantages: mean not zero");
        }
    }
    for (std::size_t i = 0; i < g.responses.size(); ++i) {
        for (auto& v : validate_response(g.responses[i])) out.push_back("responses[" + std::to_string(i) + "]." + v);
    }
    return out;
}

std::vector<std::string> validate_corpus(const std::vector<Instance>& corpus, bool check_grammar) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& inst : corpus) {
        for (auto& v : validate_instance(inst, check_grammar)) out.push_back(inst.id + ": " + v);
        if (!seen.insert(inst.id).second) out.push_back(inst.id + ": id: duplicate within corpus");
    }
    return out;
}

std::string to_string(AnswerKind kind) {
    switch (kind) {
        case AnswerKind::Expression: return "expression";
        case AnswerKind::Numeric: return "numeric";
        case AnswerKind::MultipleChoice: return "choice";
    }
    return "?";
}

std::string to_string(GeometryKind kind) {
    switch (kind) {
        case GeometryKind::Plane: return "plane";
        case GeometryKind::Solid: return "solid";
        case GeometryKind::Unknown: return "unknown";
    }
    return "?";
}

std::string to_string(RewardRule rule) {
    switch (rule) {
        case RewardRule::SymbolicMatch: return "symbolic_match";
        case RewardRule::NumericBand: return "numeric_band";
        case RewardRule::ChoiceMatch: return "choice_match";
        case RewardRule::NoMatch: return "no_match";
        case RewardRule::Unextractable: return "unextractable";
    }
    return "?";
}

AnswerKind answer_kind_from_string(const std::string& s) {
    if (s == "expression") return AnswerKind::Expression;
    if (s == "numeric") return AnswerKind::Numeric;
    if (s == "choice") return AnswerKind::MultipleChoice;
    throw DataError("unknown answer kind '" + s + "'");
}

GeometryKind geometry_kind_from_string(const std::string& s) {
    if (s == "plane") return GeometryKind::Plane;
    if (s == "solid") return GeometryKind::Solid;
    if (s == "unknown") return GeometryKind::Unknown;
    throw DataError("unknown geometry kind '" + s + "'");
}

std::string format_phash(std::uint64_t hash) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

std::uint64_t parse_phash(const std::string& hex) {
    std::uint64_t value = 0;
    if (hex.size() != 16) throw DataError("phash must be 16 hex digits, got '" + hex + "'");
    auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
    if (ec != std::errc() || ptr != hex.data() + hex.size())
        throw DataError("phash is not hexadecimal: '" + hex + "'");
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

namespace {

ojson answer_to_json(const Answer& a) {
    ojson j;
    j["kind"] = to_string(a.kind());
    switch (a.kind()) {
        case AnswerKind::Expression: j["value"] = a.expression(); break;
        case AnswerKind::Numeric: j["value"] = a.value(); break;
        case AnswerKind::MultipleChoice: j["value"] = std::string(1, a.choice()); break;
    }
    if (a.unverified()) j["unverified"] = true;
    return j;
}

Answer answer_from_json(const ojson& j) {
    const AnswerKind kind = answer_kind_from_string(j.at("kind").get<std::string>());
    const ojson& v = j.at("value");
    switch (kind) {
        case AnswerKind::Expression: {
            bool unverified = j.contains("unverified") && j["unverified"].get<bool>();
            return Answer::expression(v.get<std::string>(), unverified);
        }
        case AnswerKind::Numeric: {
            if (v.is_number()) return Answer::numeric(v.get<double>());
            const auto s = v.get<std::string>();
            double d = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
            if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("numeric answer not a number: '" + s + "'");
            return Answer::numeric(d);
        }
        case AnswerKind::MultipleChoice: {
            const auto s = v.get<std::string>();
            if (s.size() != 1) throw DataError("choice answer must be a single letter, got '" + s + "'");
            return Answer::choice(s[0]);
        }
    }
    throw DataError("unreachable answer kind");
}

}  // namespace

std::string encode_answer(const Answer& a) { return answer_to_json(a).dump(); }

Answer decode_answer(const std::string& json) {
    try {
        return answer_from_json(ojson::parse(json));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad answer record: ") + e.what());
    }
}

std::string encode_instance(const Instance& inst) {
    ojson j;
    j["id"] = inst.id;
    j["images"] = ojson::array();
    for (const auto& img : inst.images) {
        ojson ji;
        ji["path"] = img.path;
        ji["phash"] = format_phash(img.phash);
        j["images"].push_back(std::move(ji));
    }
    j["problem"] = inst.problem;
    j["answer"] = answer_to_json(inst.answer);
    j["geometry_kind"] = to_string(inst.geometry_kind);
    j["source"] = inst.source;
    return j.dump();
}

Instance decode_instance(const std::string& line) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
    }
    try {
        Instance inst;
        inst.id = j.at("id").get<std::string>();
        for (const auto& ji : j.at("images")) {
            ImageRef ref;
            ref.path = ji.at("path").get<std::string>();
            if (ji.contains("phash") && !ji["phash"].is_null()) ref.phash = parse_phash(ji["phash"].get<std::string>());
            inst.images.push_back(std::move(ref));
        }
        inst.problem = j.at("problem").get<std::string>();
        inst.answer = answer_from_json(j.at("answer"));
        inst.geometry_kind = j.contains("geometry_kind")
                                 ? geometry_kind_from_string(j["geometry_kind"].get<std::string>())
                                 : GeometryKind::Unknown;
        inst.source = j.value("source", std::string());
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad instance record: ") + e.what());
    }
}

std::vector<Instance> read_corpus(std::istream& in) {
    std::vector<Instance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(decode_instance(line));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Instance> read_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    try {
        return read_corpus(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_corpus(std::ostream& out, const std::vector<Instance>& corpus) {
    for (const auto& inst : corpus) out << encode_instance(inst) << '\n';
}

}  // namespace georl
