#include <algorithm>
#include <array>
#include <cctype>

#include "georl/latex_math.hpp"
#include "latex/names.hpp"

namespace georl::latex {

namespace {

enum class Tok { End, Number, Letter, Command, Char, LeftDelim, RightDelim };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t offset = 0;
};

bool is_spacing_command(std::string_view name) {
    static constexpr std::array<std::string_view, 6> names = {"quad", "qquad", "displaystyle", "textstyle",
                                                              "limits", "nolimits"};
    return std::find(names.begin(), names.end(), name) != names.end();
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_blank();
            if (pos_ >= src_.size()) break;
            out.push_back(next());
            if (out.back().kind == Tok::End) out.pop_back();
        }
        out.push_back(Token{Tok::End, "", src_.size()});
        return out;
    }

private:
    void skip_blank() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '~' || c == '$') {
                ++pos_;
            } else if (c == '\\' && pos_ + 1 < src_.size() &&
                       std::string_view(",;:! ").find(src_[pos_ + 1]) != std::string_view::npos) {
                pos_ += 2;
            } else {
                break;
            }
        }
    }

    std::string read_letters() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        return std::string(src_.substr(start, pos_ - start));
    }

    // Delimiter following \left or \right.
    std::string read_delimiter(std::size_t at) {
        skip_blank();
        if (pos_ >= src_.size()) throw ParseError(pos_, {"delimiter"}, "");
        char c = src_[pos_];
        if (c == '(' || c == ')' || c == '[' || c == ']' || c == '|' || c == '.') {
            ++pos_;
            return std::string(1, c);
        }
        if (c == '\\') {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '{' || src_[pos_] == '}' || src_[pos_] == '|')) {
                char d = src_[pos_++];
                return d == '|' ? "|" : std::string(1, d);
            }
            auto name = read_letters();
            if (name == "lvert" || name == "rvert" || name == "vert") return "|";
            if (name == "lbrace") return "{";
            if (name == "rbrace") return "}";
        }
        throw ParseError(at, {"delimiter"}, std::string(src_.substr(at, pos_ - at)));
    }

    Token next() {
        const std::size_t start = pos_;
        const auto c = static_cast<unsigned char>(src_[pos_]);
        if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                ++pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
            return {Tok::Number, std::string(src_.substr(start, pos_ - start)), start};
        }
        if (std::isalpha(c)) {
            ++pos_;
            return {Tok::Letter, std::string(1, static_cast<char>(c)), start};
        }
        if (c == '\\') {
            ++pos_;
            if (pos_ >= src_.size()) throw ParseError(start, {"command name"}, "");
            if (!std::isalpha(static_cast<unsigned char>(src_[pos_]))) {
                char d = src_[pos_++];
                if (d == '{' || d == '}') return {Tok::Char, std::string(1, d), start};
                throw ParseError(start, {"command"}, std::string("\\") + d);
            }
            auto name = read_letters();
            if (is_spacing_command(name)) return {Tok::End, "", start};
            if (name == "left") return {Tok::LeftDelim, read_delimiter(start), start};
            if (name == "right") return {Tok::RightDelim, read_delimiter(start), start};
            if (name == "lvert") return {Tok::LeftDelim, "|", start};
            if (name == "rvert") return {Tok::RightDelim, "|", start};
            return {Tok::Command, name, start};
        }
        if (c >= 0x80) {
            // A handful of Unicode math symbols that LaTeX-ish answers carry verbatim.
            static const std::array<std::pair<std::string_view, Token>, 7> table = {{
                {"\xCF\x80", {Tok::Command, "pi", 0}},
                {"\xC2\xB0", {Tok::Command, "circ", 0}},
                {"\xC3\x97", {Tok::Command, "times", 0}},
                {"\xC2\xB7", {Tok::Command, "cdot", 0}},
                {"\xE2\x8B\x85", {Tok::Command, "cdot", 0}},
                {"\xC3\xB7", {Tok::Command, "div", 0}},
                {"\xE2\x88\x92", {Tok::Char, "-", 0}},
            }};
            for (const auto& [utf8, tok] : table) {
                if (src_.substr(pos_, utf8.size()) == utf8) {
                    pos_ += utf8.size();
                    Token t = tok;
                    t.offset = start;
                    return t;
                }
            }
            throw ParseError(start, {"ASCII LaTeX"}, std::string(src_.substr(start, 1)));
        }
        ++pos_;
        return {Tok::Char, std::string(1, static_cast<char>(c)), start};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// Boost reads a leading 0 as an octal prefix, so digits are stripped of leading zeros first.
Integer decimal_integer(std::string_view digits) {
    const auto first = digits.find_first_not_of('0');
    if (first == std::string_view::npos) return Integer(0);
    return Integer(std::string(digits.substr(first)));
}

Rational decimal_to_rational(const std::string& text) {
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(decimal_integer(text));
    const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const std::size_t frac_len = text.size() - dot - 1;
    return Rational(decimal_integer(digits), boost::multiprecision::pow(Integer(10), static_cast<unsigned>(frac_len)));
}

const std::vector<std::string>& operand_expected() {
    static const std::vector<std::string> v = {"number", "variable", "'\\pi'", "'\\frac'", "'\\sqrt'",
                                               "function", "'('", "'{'", "'|'"};
    return v;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

    Expr parse() {
        if (peek().kind == Tok::End) fail(operand_expected());
        Expr e = additive();
        if (peek().kind != Tok::End) fail({"operator", "end of input"});
        return e;
    }

private:
    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool at_char(char c, std::size_t k = 0) const {
        const auto& t = peek(k);
        return t.kind == Tok::Char && t.text.size() == 1 && t.text[0] == c;
    }
    bool at_command(std::string_view name, std::size_t k = 0) const {
        const auto& t = peek(k);
        return t.kind == Tok::Command && t.text == name;
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const auto& t = peek();
        throw ParseError(t.offset, std::move(expected), t.kind == Tok::End ? "" : t.text);
    }

    void expect_char(char c) {
        if (!at_char(c)) fail({std::string("'") + c + "'"});
        take();
    }

    // additive := signed (('+' | '-') signed)*
    Expr additive() {
        Expr acc = signed_term();
        bool open_sum = false;
        std::vector<Expr> terms;
        while (true) {
            if (at_char('+')) {
                take();
                Expr rhs = signed_term();
                if (!open_sum) {
                    terms = {acc};
                    open_sum = true;
                }
                terms.push_back(std::move(rhs));
                acc = Expr::add(terms);
            } else if (at_char('-')) {
                take();
                Expr rhs = signed_term();
                acc = Expr::sub(acc, std::move(rhs));
                open_sum = false;
            } else {
                break;
            }
        }
        return acc;
    }

    Expr signed_term() {
        if (at_char('-')) {
            take();
            return Expr::neg(signed_term());
        }
        if (at_char('+')) {
            take();
            return signed_term();
        }
        return product();
    }

    Expr signed_factor() {
        if (at_char('-')) {
            take();
            return Expr::neg(signed_factor());
        }
        if (at_char('+')) {
            take();
            return signed_factor();
        }
        return postfix();
    }

    bool at_explicit_mul() const { return at_char('*') || at_command("cdot") || at_command("times") || at_command("ast"); }
    bool at_explicit_div() const { return at_char('/') || at_command("div"); }

    bool at_function() const {
        const auto& t = peek();
        return t.kind == Tok::Command && function_from_name(t.text).has_value();
    }

    bool starts_factor() const {
        const auto& t = peek();
        switch (t.kind) {
            case Tok::Number:
            case Tok::Letter:
            case Tok::LeftDelim: return true;
            case Tok::Char: return t.text == "(" || t.text == "[" || t.text == "{" || (t.text == "|" && bar_depth_ == 0);
            case Tok::Command:
                return t.text == "pi" || t.text == "frac" || t.text == "dfrac" || t.text == "tfrac" || t.text == "sqrt" ||
                       t.text == "mathrm" || t.text == "text" || t.text == "operatorname" ||
                       function_from_name(t.text).has_value() || is_greek(t.text);
            default: return false;
        }
    }

    // product := postfix ((explicit-op signed-factor) | postfix)*
    Expr product() {
        Expr acc = postfix();
        std::vector<Expr> factors;
        bool open_product = false;
        auto extend = [&](Expr rhs) {
            if (!open_product) {
                factors = {acc};
                open_product = true;
            }
            factors.push_back(std::move(rhs));
            acc = Expr::mul(factors);
        };
        while (true) {
            if (at_explicit_mul()) {
                take();
                extend(signed_factor());
            } else if (at_explicit_div()) {
                take();
                acc = Expr::div(acc, signed_factor());
                open_product = false;
            } else if (starts_factor()) {
                extend(postfix());
            } else {
                break;
            }
        }
        return acc;
    }

    bool at_degree() const {
        return at_command("circ") || (at_char('{') && at_command("circ", 1) && at_char('}', 2));
    }

    static Expr degrees(Expr e) {
        return Expr::mul({std::move(e), Expr::div(Expr::constant(NamedConstant::Pi), Expr::integer(180))});
    }

    Expr postfix() {
        Expr base = primary();
        while (true) {
            if (at_command("circ")) {
                take();
                base = degrees(std::move(base));
            } else if (at_char('^')) {
                take();
                if (at_degree()) {
                    if (at_char('{')) {
                        take();
                        take();
                    }
                    take();
                    base = degrees(std::move(base));
                } else {
                    base = Expr::pow(std::move(base), script_argument(true));
                }
            } else {
                break;
            }
        }
        return base;
    }

    // Argument of ^, \frac, \sqrt: a braced group or a single token.
    Expr script_argument(bool allow_sign) {
        if (at_char('{')) {
            take();
            Expr e = additive();
            expect_char('}');
            return e;
        }
        if (allow_sign && at_char('-')) {
            take();
            return Expr::neg(script_argument(false));
        }
        auto& t = toks_[pos_];
        switch (t.kind) {
            case Tok::Number: {
                // LaTeX takes one character: x^23 is x^2 times 3.
                if (t.text.size() > 1 && std::isdigit(static_cast<unsigned char>(t.text[1]))) {
                    Expr digit = Expr::number(Rational(t.text[0] - '0'));
                    t.text.erase(0, 1);
                    t.offset += 1;
                    return digit;
                }
                if (t.text.size() > 1) fail({"single digit or braced group"});
                take();
                return Expr::number(Rational(t.text[0] - '0'));
            }
            case Tok::Letter: return letter();
            case Tok::Command:
                if (t.text == "pi") {
                    take();
                    return Expr::constant(NamedConstant::Pi);
                }
                if (is_greek(t.text)) {
                    take();
                    return Expr::variable(t.text);
                }
                break;
            default: break;
        }
        fail({"'{'", "digit", "letter"});
    }

    std::string subscript() {
        take();  // '_'
        std::string out;
        if (at_char('{')) {
            take();
            while (peek().kind == Tok::Number || peek().kind == Tok::Letter) out += take().text;
            if (out.empty()) fail({"letter", "digit"});
            expect_char('}');
            return out;
        }
        auto& t = toks_[pos_];
        if (t.kind == Tok::Letter) return take().text;
        if (t.kind == Tok::Number) {
            std::string d(1, t.text[0]);
            if (t.text.size() > 1) {
                t.text.erase(0, 1);
                t.offset += 1;
            } else {
                take();
            }
            return d;
        }
        fail({"'{'", "letter", "digit"});
    }

    Expr letter() {
        std::string name = take().text;
        if (at_char('_')) return Expr::variable(name + "_" + subscript());
        if (name == "e") return Expr::constant(NamedConstant::E);
        return Expr::variable(name);
    }

    Expr group_until(char close) {
        Expr e = additive();
        expect_char(close);
        return e;
    }

    Expr delimited(const std::string& open) {
        if (open == "|") {
            ++bar_depth_;
            Expr inner = additive();
            --bar_depth_;
            if (peek().kind != Tok::RightDelim || (peek().text != "|" && peek().text != ".")) fail({"'\\right|'"});
            take();
            return Expr::abs(std::move(inner));
        }
        Expr inner = additive();
        if (peek().kind != Tok::RightDelim) fail({"'\\right'"});
        const std::string close = take().text;
        static const std::array<std::pair<std::string_view, std::string_view>, 3> pairs = {
            {{"(", ")"}, {"[", "]"}, {"{", "}"}}};
        bool ok = open == "." || close == ".";
        for (auto [o, c] : pairs) ok = ok || (o == open && c == close);
        if (!ok) throw ParseError(toks_[pos_ - 1].offset, {"matching \\right delimiter"}, close);
        return inner;
    }

    Expr function_application(Function fn) {
        std::optional<Expr> power;
        std::optional<Expr> base;
        for (int i = 0; i < 2; ++i) {
            if (at_char('^') && !power) {
                take();
                power = script_argument(true);
            } else if (at_char('_') && !base && fn == Function::Log) {
                take();
                base = script_argument(false);
            }
        }
        Expr arg = [&] {
            const auto& t = peek();
            if ((t.kind == Tok::Char && (t.text == "(" || t.text == "[" || t.text == "{")) || t.kind == Tok::LeftDelim)
                return primary();
            if (!starts_factor()) fail(operand_expected());
            Expr acc = postfix();
            std::vector<Expr> factors;
            while (starts_factor() && !at_function()) {
                if (factors.empty()) factors.push_back(acc);
                factors.push_back(postfix());
                acc = Expr::mul(factors);
            }
            return acc;
        }();
        Expr out = base ? Expr::div(Expr::func(Function::Ln, std::move(arg)), Expr::func(Function::Ln, *base))
                        : Expr::func(fn, std::move(arg));
        if (power) out = Expr::pow(std::move(out), *power);
        return out;
    }

    // Braced text argument of \mathrm / \text / \operatorname.
    std::string braced_word() {
        expect_char('{');
        std::string word;
        while (peek().kind == Tok::Letter) word += take().text;
        expect_char('}');
        return word;
    }

    Expr primary() {
        const Token t = peek();
        switch (t.kind) {
            case Tok::Number:
                take();
                return Expr::number(decimal_to_rational(t.text));
            case Tok::Letter: return letter();
            case Tok::LeftDelim: take(); return delimited(t.text);
            case Tok::Char:
                if (t.text == "(") {
                    take();
                    return group_until(')');
                }
                if (t.text == "[") {
                    take();
                    return group_until(']');
                }
                if (t.text == "{") {
                    take();
                    return group_until('}');
                }
                if (t.text == "|") {
                    take();
                    ++bar_depth_;
                    Expr inner = additive();
                    --bar_depth_;
                    expect_char('|');
                    return Expr::abs(std::move(inner));
                }
                break;
            case Tok::Command: {
                if (t.text == "pi") {
                    take();
                    return Expr::constant(NamedConstant::Pi);
                }
                if (t.text == "frac" || t.text == "dfrac" || t.text == "tfrac") {
                    take();
                    Expr num = script_argument(false);
                    Expr den = script_argument(false);
                    return Expr::div(std::move(num), std::move(den));
                }
                if (t.text == "sqrt") {
                    take();
                    int index = 2;
                    if (at_char('[')) {
                        take();
                        const Token& n = peek();
                        if (n.kind != Tok::Number || n.text.find('.') != std::string::npos) fail({"root index"});
                        index = std::stoi(take().text);
                        if (index < 2) throw ParseError(n.offset, {"root index >= 2"}, n.text);
                        expect_char(']');
                    }
                    return Expr::root(index, script_argument(false));
                }
                if (auto fn = function_from_name(t.text)) {
                    take();
                    return function_application(*fn);
                }
                if (is_greek(t.text)) {
                    take();
                    if (at_char('_')) return Expr::variable(t.text + "_" + subscript());
                    return Expr::variable(t.text);
                }
                if (t.text == "mathrm" || t.text == "text" || t.text == "operatorname") {
                    take();
                    const std::size_t at = peek().offset;
                    std::string word = braced_word();
                    if (word == "e") return Expr::constant(NamedConstant::E);
                    if (auto fn = function_from_name(word)) return function_application(*fn);
                    if (word.size() == 1) return Expr::variable(word);
                    throw ParseError(at, {"e", "function name", "single letter"}, word);
                }
                break;
            }
            default: break;
        }
        fail(operand_expected());
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int bar_depth_ = 0;
};

}  // namespace

MathExpr parse_latex(std::string_view src) {
    Parser p(src);
    return MathExpr{p.parse(), std::string(src)};
}

}  // namespace georl::latex
