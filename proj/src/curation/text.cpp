#include <algorithm>
#include <cctype>
#include <optional>
#include <utility>

#include "georl/curation.hpp"
#include "georl/latex_math.hpp"

namespace georl {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

struct Marker {
    std::size_t pos;
    std::size_t len;
    int number;
};

// Sub-question markers in text order.
std::vector<Marker> find_markers(std::string_view s) {
    std::vector<Marker> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool boundary = i == 0 || (!is_alnum(s[i - 1]) && s[i - 1] != '^' && s[i - 1] != '_' && s[i - 1] != '\\');
        if (s[i] == '(' && boundary) {
            std::size_t j = i + 1;
            int n = 0;
            while (j < s.size() && j < i + 3 && is_digit(s[j])) n = n * 10 + (s[j++] - '0');
            if (j > i + 1 && j < s.size() && s[j] == ')') out.push_back({i, j + 1 - i, n});
        } else if (s.compare(i, 3, "\xEF\xBC\x88") == 0) {  // fullwidth (
            std::size_t j = i + 3;
            int n = 0;
            while (j < s.size() && j < i + 5 && is_digit(s[j])) n = n * 10 + (s[j++] - '0');
            if (j > i + 3 && s.compare(j, 3, "\xEF\xBC\x89") == 0) out.push_back({i, j + 3 - i, n});
        } else if (s.compare(i, 2, "\xE2\x91") == 0 && i + 2 < s.size()) {  // circled 1-20: U+2460..U+2473
            const auto b = static_cast<unsigned char>(s[i + 2]);
            if (b >= 0xA0 && b <= 0xB3) out.push_back({i, 3, b - 0xA0 + 1});
        }
    }
    return out;
}

struct Replacement {
    std::string_view from;
    std::string_view to;
};

// Commands that end in a letter; a following letter needs a separating space.
constexpr Replacement kSymbols[] = {
    {"\xCF\x80", "\\pi"},       {"\xC2\xB0", "^{\\circ}"},   {"\xC3\x97", "\\times"},   {"\xC3\xB7", "\\div"},
    {"\xC2\xB7", "\\cdot"},     {"\xE2\x8B\x85", "\\cdot"},  {"\xE2\x89\xA4", "\\leq"}, {"\xE2\x89\xA5", "\\geq"},
    {"\xE2\x89\xA0", "\\neq"},  {"\xE2\x88\xA0", "\\angle"}, {"\xE2\x96\xB3", "\\triangle"},
    {"\xE2\x8A\xA5", "\\perp"}, {"\xE2\x88\xA5", "\\parallel"}, {"\xE2\x88\x9E", "\\infty"},
    {"\xC2\xB1", "\\pm"},       {"\xE2\x88\x9A", "\\sqrt"},  {"\xE2\x88\x92", "-"},     {"\xCE\xB1", "\\alpha"},
    {"\xCE\xB2", "\\beta"},     {"\xCE\xB8", "\\theta"},
};

// Superscript digits 0-9.
constexpr std::string_view kSuperscripts[] = {"\xE2\x81\xB0", "\xC2\xB9", "\xC2\xB2", "\xC2\xB3", "\xE2\x81\xB4",
                                              "\xE2\x81\xB5", "\xE2\x81\xB6", "\xE2\x81\xB7", "\xE2\x81\xB8",
                                              "\xE2\x81\xB9"};

int superscript_at(std::string_view s, std::size_t i) {
    for (int d = 0; d < 10; ++d)
        if (s.substr(i).starts_with(kSuperscripts[d])) return d;
    return -1;
}

void append_command(std::string& out, std::string_view cmd, std::string_view rest) {
    out += cmd;
    if (!rest.empty() && is_alpha(rest.front()) && is_alpha(cmd.back())) out += ' ';
}

// Index of the bracket matching the one at `open`, scanning forward; npos if unbalanced.
std::size_t match_forward(std::string_view s, std::size_t open) {
    const char o = s[open], c = o == '(' ? ')' : o == '{' ? '}' : ']';
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == o) ++depth;
        if (s[i] == c && --depth == 0) return i;
    }
    return std::string_view::npos;
}

std::size_t match_backward(std::string_view s, std::size_t close) {
    const char c = s[close], o = c == ')' ? '(' : c == '}' ? '{' : '[';
    int depth = 0;
    for (std::size_t i = close + 1; i-- > 0;) {
        if (s[i] == c) ++depth;
        if (s[i] == o && --depth == 0) return i;
    }
    return std::string_view::npos;
}

constexpr std::size_t npos = std::string::npos;

std::string replace_words(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        const bool start = i == 0 || (!is_alpha(s[i - 1]) && s[i - 1] != '\\');
        bool replaced = false;
        for (auto [word, cmd] : {std::pair<std::string_view, std::string_view>{"sqrt", "\\sqrt"}, {"pi", "\\pi"}}) {
            if (start && std::string_view(s).substr(i).starts_with(word) &&
                (i + word.size() >= s.size() || !is_alpha(s[i + word.size()]))) {
                append_command(out, cmd, std::string_view(s).substr(i + word.size()));
                i += word.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out += s[i++];
    }
    return out;
}

// End (exclusive) of the operand starting at `i`, or npos.
std::size_t operand_end(const std::string& s, std::size_t i) {
    if (i >= s.size()) return npos;
    std::size_t end = npos;
    if (s[i] == '(' || s[i] == '{') {
        const auto m = match_forward(s, i);
        if (m == npos) return npos;
        end = m + 1;
    } else if (is_digit(s[i]) || s[i] == '.') {
        end = i;
        while (end < s.size() && (is_digit(s[end]) || s[end] == '.')) ++end;
    } else if (s[i] == '\\') {
        end = i + 1;
        while (end < s.size() && is_alpha(s[end])) ++end;
        const std::string_view cmd = std::string_view(s).substr(i + 1, end - i - 1);
        const int groups = cmd == "frac" ? 2 : cmd == "sqrt" ? 1 : 0;
        for (int g = 0; g < groups; ++g) {
            if (end < s.size() && s[end] == '[') {
                const auto m = match_forward(s, end);
                if (m == npos) return npos;
                end = m + 1;
            }
            if (end >= s.size() || s[end] != '{') return npos;
            const auto m = match_forward(s, end);
            if (m == npos) return npos;
            end = m + 1;
        }
        if (end == i + 1) return npos;
    } else if (is_alpha(s[i])) {
        end = i + 1;
    } else {
        return npos;
    }
    // Trailing power.
    if (end < s.size() && s[end] == '^' && end + 1 < s.size()) {
        if (s[end + 1] == '{') {
            const auto m = match_forward(s, end + 1);
            if (m != npos) end = m + 1;
        } else if (is_alnum(s[end + 1])) {
            end += 2;
        }
    }
    return end;
}

// Start of the operand ending just before `end`, or npos.
std::size_t operand_start(const std::string& s, std::size_t end) {
    if (end == 0) return npos;
    std::size_t i = end - 1;
    std::size_t start = npos;
    if (s[i] == ')' || s[i] == '}') {
        const auto m = match_backward(s, i);
        if (m == npos) return npos;
        start = m;
        if (s[i] == '}') {
            if (start > 0 && (s[start - 1] == '^' || s[start - 1] == '_')) return operand_start(s, start - 1);
            if (start >= 5 && s.compare(start - 5, 5, "\\sqrt") == 0) return start - 5;
            if (start > 0 && s[start - 1] == '}') {
                const auto m2 = match_backward(s, start - 1);
                if (m2 != npos && m2 >= 5 && s.compare(m2 - 5, 5, "\\frac") == 0) return m2 - 5;
            }
        }
        return start;
    }
    if (is_digit(s[i]) || s[i] == '.') {
        start = i;
        while (start > 0 && (is_digit(s[start - 1]) || s[start - 1] == '.')) --start;
        if (start > 0 && s[start - 1] == '^') return operand_start(s, start - 1);
        return start;
    }
    if (is_alpha(s[i])) {
        start = i;
        while (start > 0 && is_alpha(s[start - 1])) --start;
        if (start > 0 && s[start - 1] == '\\') return start - 1;
        return i;  // a single variable letter
    }
    return npos;
}

std::string strip_parens(std::string_view s) {
    if (s.size() >= 2 && ((s.front() == '(' && s.back() == ')') || (s.front() == '{' && s.back() == '}')) &&
        match_forward(s, 0) == s.size() - 1)
        return std::string(s.substr(1, s.size() - 2));
    return std::string(s);
}

std::string brace_roots(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        if (s.compare(i, 5, "\\sqrt") == 0 && (i + 5 >= s.size() || !is_alpha(s[i + 5]))) {
            out += "\\sqrt";
            std::size_t j = i + 5;
            while (j < s.size() && s[j] == ' ') ++j;
            if (j < s.size() && (s[j] == '{' || s[j] == '[')) {
                i = j;
                continue;
            }
            const auto end = operand_end(s, j);
            if (end == npos) {
                i = j;
                continue;
            }
            out += "{" + strip_parens(std::string_view(s).substr(j, end - j)) + "}";
            i = end;
            continue;
        }
        out += s[i++];
    }
    return out;
}

std::string fractions(std::string s) {
    for (std::size_t guard = 0; guard < 64; ++guard) {
        const auto slash = s.find('/');
        if (slash == npos) break;
        std::size_t lend = slash;
        while (lend > 0 && s[lend - 1] == ' ') --lend;
        std::size_t rbeg = slash + 1;
        while (rbeg < s.size() && s[rbeg] == ' ') ++rbeg;
        const auto lstart = operand_start(s, lend);
        const auto rend = operand_end(s, rbeg);
        if (lstart == npos || rend == npos) {
            s.replace(slash, 1, "\\div ");  // keep the quotient, drop the ambiguity
            continue;
        }
        const std::string num = strip_parens(std::string_view(s).substr(lstart, lend - lstart));
        const std::string den = strip_parens(std::string_view(s).substr(rbeg, rend - rbeg));
        s.replace(lstart, rend - lstart, "\\frac{" + num + "}{" + den + "}");
    }
    return s;
}

bool ascii_only(std::string_view s) {
    for (char c : s)
        if (static_cast<unsigned char>(c) >= 0x80) return false;
    return true;
}

}  // namespace

SplitText split_markers(std::string_view text) {
    const auto markers = find_markers(text);
    std::vector<Marker> chain;
    for (const auto& m : markers)
        if (m.number == static_cast<int>(chain.size()) + 1) chain.push_back(m);
    const auto body = [&](std::size_t k) {
        const std::size_t begin = chain[k].pos + chain[k].len;
        const std::size_t end = k + 1 < chain.size() ? chain[k + 1].pos : text.size();
        return trim(text.substr(begin, end - begin));
    };
    // A sub-question has words; "part (1) ... part (2)." or a trailing "see figure (3)." only cites a number.
    const auto has_content = [](const std::string& p) {
        return std::any_of(p.begin(), p.end(), [](char c) { return is_alnum(c) || (c & 0x80); });
    };
    while (chain.size() >= 2 && !has_content(body(chain.size() - 1))) chain.pop_back();
    SplitText out;
    if (chain.size() < 2) return out;
    out.stem = trim(text.substr(0, chain.front().pos));
    for (std::size_t k = 0; k < chain.size(); ++k) out.parts.push_back(body(k));
    if (!std::all_of(out.parts.begin(), out.parts.end(), has_content)) return {};
    return out;
}

std::vector<std::string> RuleBasedSplitter::split(const std::string& text) {
    const SplitText s = split_markers(text);
    if (s.parts.empty()) return {text};
    std::vector<std::string> out;
    for (const auto& p : s.parts) out.push_back(s.stem.empty() ? p : s.stem + " " + p);
    return out;
}

std::string latexify_symbols(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (static_cast<unsigned char>(text[i]) < 0x80) {
            out += text[i++];
            continue;
        }
        if (superscript_at(text, i) >= 0) {
            std::string digits;
            int d;
            while (i < text.size() && (d = superscript_at(text, i)) >= 0) {
                digits += static_cast<char>('0' + d);
                i += kSuperscripts[d].size();
            }
            out += "^{" + digits + "}";
            continue;
        }
        bool replaced = false;
        for (const auto& r : kSymbols) {
            if (text.substr(i).starts_with(r.from)) {
                i += r.from.size();
                append_command(out, r.to, text.substr(i));
                replaced = true;
                break;
            }
        }
        if (!replaced) out += text[i++];
    }
    return out;
}

std::string RuleBasedFormatter::format(const std::string& text) {
    std::string s = latexify_symbols(text);
    s = replace_words(s);
    s = brace_roots(s);
    std::string starred;
    for (char c : s) starred += c == '*' ? std::string("\\cdot ") : std::string(1, c);
    return trim(fractions(starred));
}

std::uint64_t utf8_length(std::string_view s) {
    std::uint64_t n = 0;
    for (char c : s) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    return n;
}

namespace {

std::optional<latex::MathExpr> try_parse(const std::string& s) {
    try {
        return latex::parse_latex(s);
    } catch (const latex::ParseError&) {
        return std::nullopt;
    }
}

// Already LaTeX in the accepted grammar, so no rewrite is attempted.
bool answer_is_normal(const std::string& s) {
    if (!ascii_only(s) || s.find('/') != npos || s.find('*') != npos) return false;
    if (replace_words(s) != s) return false;
    return try_parse(s).has_value();
}

}  // namespace

std::vector<Instance> split_subquestions(const Instance& inst, ExternalSplitter& splitter,
                                         std::vector<std::string>* log) {
    std::vector<std::string> problems;
    try {
        problems = splitter.split(inst.problem);
    } catch (const SplitterUnavailable& e) {
        if (log) log->push_back(inst.id + ": splitter unavailable, kept whole (" + e.what() + ")");
        return {inst};
    }
    if (problems.size() < 2) return {inst};
    if (inst.answer.kind() != AnswerKind::Expression) {
        if (log) log->push_back(inst.id + ": " + std::to_string(problems.size()) +
                                " sub-questions but a single " + to_string(inst.answer.kind()) + " answer, kept whole");
        return {inst};
    }
    const SplitText answers = split_markers(inst.answer.expression());
    if (answers.parts.size() != problems.size()) {
        if (log) log->push_back(inst.id + ": " + std::to_string(problems.size()) + " sub-questions but " +
                                std::to_string(answers.parts.size()) + " answer parts, kept whole");
        return {inst};
    }
    std::vector<Instance> out;
    for (std::size_t k = 0; k < problems.size(); ++k) {
        Instance part = inst;
        part.id = inst.id + "#" + std::to_string(k + 1);
        part.problem = problems[k];
        part.answer = Answer::expression(answers.parts[k], !try_parse(answers.parts[k]).has_value());
        out.push_back(std::move(part));
    }
    return out;
}

Instance normalize_formulae(const Instance& inst, ExternalFormatter& formatter) {
    Instance out = inst;
    out.problem = latexify_symbols(inst.problem);
    // Unverified answers are retried: a split part such as "x²" only parses after rewriting.
    if (inst.answer.kind() != AnswerKind::Expression) return out;
    const std::string& original = inst.answer.expression();
    if (answer_is_normal(original)) {
        out.answer = Answer::expression(original);
        return out;
    }
    std::string rewritten;
    try {
        rewritten = formatter.format(original);
    } catch (const FormatterUnavailable&) {
        RuleBasedFormatter fallback;
        rewritten = fallback.format(original);
    }
    // Plain-text function words would otherwise parse as products of single-letter variables.
    const auto before = try_parse(brace_roots(replace_words(original)));
    const auto after = try_parse(rewritten);
    if (after) {
        if (before && !latex::symbolically_equal(*before, *after).equal) return out;
        out.answer = Answer::expression(rewritten);
    } else if (before) {
        return out;
    } else {
        out.answer = Answer::expression(rewritten, true);
    }
    return out;
}

}  // namespace georl
