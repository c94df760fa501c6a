#include "georl/reward.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "georl/parallel.hpp"

namespace georl {

namespace {

constexpr std::string_view kBox = "\\boxed{";
constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Index one past the brace closing the group opened just before `pos`; npos if unbalanced.
std::size_t match_brace(std::string_view s, std::size_t pos) {
    int depth = 1;
    for (std::size_t i = pos; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
            ++i;  // escaped brace
            continue;
        }
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

bool think_precedes(std::string_view s, std::size_t limit) {
    const std::size_t open = s.find(kThinkOpen);
    if (open == std::string_view::npos) return false;
    const std::size_t close = s.find(kThinkClose, open + kThinkOpen.size());
    return close != std::string_view::npos && close + kThinkClose.size() <= limit;
}

std::optional<double> plain_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<latex::MathExpr> try_parse(std::string_view s) {
    try {
        return latex::parse_latex(s);
    } catch (const latex::ParseError&) {
        return std::nullopt;
    }
}

// Right-hand side of the last '=' when present, e.g. "AB = 2\sqrt{3}".
std::optional<std::string_view> rhs_of(std::string_view s) {
    const std::size_t eq = s.rfind('=');
    if (eq == std::string_view::npos) return std::nullopt;
    std::string_view rhs = trim(s.substr(eq + 1));
    if (rhs.empty()) return std::nullopt;
    return rhs;
}

std::optional<latex::MathExpr> parse_payload(std::string_view payload) {
    if (auto e = try_parse(payload)) return e;
    if (auto rhs = rhs_of(payload)) return try_parse(*rhs);
    return std::nullopt;
}

std::string squash(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

std::string_view unwrap_command(std::string_view s) {
    for (std::string_view cmd : {"\\text{", "\\textbf{", "\\mathrm{", "\\mathbf{", "\\textrm{"}) {
        if (s.starts_with(cmd) && s.ends_with('}')) return trim(s.substr(cmd.size(), s.size() - cmd.size() - 1));
    }
    return s;
}

}  // namespace

void RewardConfig::validate() const {
    if (!(numeric_band > 0.0) || !std::isfinite(numeric_band))
        throw std::invalid_argument("numeric_band must be positive");
    if (!(format_weight >= 0.0) || !std::isfinite(format_weight))
        throw std::invalid_argument("format_weight must be finite and >= 0");
    if (!(zero_target_abs_tol >= 0.0)) throw std::invalid_argument("zero_target_abs_tol must be >= 0");
}

std::optional<Extraction> extract_final_answer(std::string_view raw) {
    std::optional<Extraction> best;
    std::size_t pos = 0;
    while ((pos = raw.find(kBox, pos)) != std::string_view::npos) {
        const std::size_t open = pos + kBox.size();
        const std::size_t end = match_brace(raw, open);
        if (end == std::string_view::npos) {
            pos = open;
            continue;
        }
        best = Extraction{std::string(raw.substr(open, end - 1 - open)), false, pos};
        pos = end;
    }
    if (best) best->think_ok = think_precedes(raw, best->box_offset);
    return best;
}

double numeric_band_reward(double p, double t, const RewardConfig& cfg) {
    if (t == 0.0) return std::abs(p) <= cfg.zero_target_abs_tol ? 1.0 : 0.0;
    return std::abs(p - t) / std::abs(t) <= cfg.numeric_band ? 1.0 : 0.0;
}

std::optional<double> payload_value(std::string_view payload) {
    payload = trim(payload);
    // Numeric golds are stated in the problem's unit, so a trailing degree mark is a unit, not a conversion.
    for (std::string_view mark : {"^{\\circ}", "^\\circ", "\xC2\xB0"}) {
        if (payload.size() > mark.size() && payload.ends_with(mark)) {
            payload = trim(payload.substr(0, payload.size() - mark.size()));
            break;
        }
    }
    if (auto v = plain_number(payload)) return v;
    auto expr = parse_payload(payload);
    if (!expr || !latex::free_variables(expr->ast).empty()) return std::nullopt;
    try {
        return latex::evaluate(*expr, {});
    } catch (const latex::EvalError&) {
        return std::nullopt;
    }
}

std::optional<char> payload_choice(std::string_view payload) {
    std::string_view s = unwrap_command(trim(payload));
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == ':' || s.back() == ' '))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = trim(s.substr(1, s.size() - 2));
    s = unwrap_command(s);
    if (s.size() != 1) return std::nullopt;
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s.front())));
    if (c < 'A' || c > 'H') return std::nullopt;
    return c;
}

RewardBreakdown score_response(std::string_view raw_text, const Answer& gold, const RewardConfig& cfg) {
    RewardBreakdown out;
    const auto extraction = extract_final_answer(raw_text);
    if (!extraction) {
        out.rule_fired = RewardRule::Unextractable;
        return out;
    }
    out.format_reward = (extraction->think_ok || !cfg.require_think_tags) ? 1.0 : 0.0;
    const std::string_view payload = extraction->payload;
    bool matched = false;
    RewardRule rule = RewardRule::NoMatch;

    switch (gold.kind()) {
        case AnswerKind::Expression: {
            const auto pred = parse_payload(payload);
            const auto expected = try_parse(gold.expression());
            if (expected && pred) {
                const auto eq = latex::symbolically_equal(*pred, *expected);
                matched = eq.equal;
                out.fallback_used = eq.fallback_used;
            } else if (!expected) {
                matched = squash(payload) == squash(gold.expression());
            }
            rule = RewardRule::SymbolicMatch;
            break;
        }
        case AnswerKind::Numeric: {
            const auto value = payload_value(payload);
            matched = value && numeric_band_reward(*value, gold.value(), cfg) == 1.0;
            rule = RewardRule::NumericBand;
            break;
        }
        case AnswerKind::MultipleChoice: {
            const auto letter = payload_choice(payload);
            matched = letter && *letter == std::toupper(static_cast<unsigned char>(gold.choice()));
            rule = RewardRule::ChoiceMatch;
            break;
        }
    }
    out.rule_fired = matched ? rule : RewardRule::NoMatch;
    out.answer_reward = matched ? 1.0 : 0.0;
    out.total = out.answer_reward + cfg.format_weight * out.format_reward;
    return out;
}

std::vector<RewardBreakdown> score_batch(const std::vector<std::string>& responses, const std::vector<Answer>& golds,
                                         const RewardConfig& cfg, unsigned threads) {
    if (responses.size() != golds.size())
        throw LengthMismatch("score_batch: " + std::to_string(responses.size()) + " responses for " +
                             std::to_string(golds.size()) + " golds");
    std::vector<RewardBreakdown> out(responses.size());
    parallel_for(responses.size(), threads, [&](std::size_t i) { out[i] = score_response(responses[i], golds[i], cfg); });
    return out;
}

}  // namespace georl
