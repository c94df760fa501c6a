#include <cctype>

#include "georl/latex_math.hpp"
#include "latex/names.hpp"

namespace georl::latex {

namespace {

std::string render_rational(const Rational& r) {
    const Integer num = boost::multiprecision::numerator(r);
    const Integer den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    // Denominators of the form 2^a 5^b have a finite decimal expansion.
    Integer d = den;
    unsigned twos = 0, fives = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++twos;
    }
    while (d % 5 == 0) {
        d /= 5;
        ++fives;
    }
    if (d != 1) return "\\frac{" + num.str() + "}{" + den.str() + "}";
    const unsigned places = std::max(twos, fives);
    const Integer scaled = num * boost::multiprecision::pow(Integer(10), places) / den;
    std::string digits = scaled.str();
    if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
    digits.insert(digits.size() - places, ".");
    return digits;
}

std::string render_variable(const std::string& name) {
    auto us = name.find('_');
    std::string base = name.substr(0, us);
    std::string out = is_greek(base) ? "\\" + base : base;
    if (us != std::string::npos) out += "_{" + name.substr(us + 1) + "}";
    return out;
}

std::string wrap(const std::string& s) { return "\\left(" + s + "\\right)"; }

bool is_additive(const Expr& e) { return e.op() == Op::Add || e.op() == Op::Sub; }

std::string render(const Expr& e);

std::string render_child(const Expr& e, bool parenthesize) { return parenthesize ? wrap(render(e)) : render(e); }

std::string render(const Expr& e) {
    const auto kids = e.children();
    switch (e.op()) {
        case Op::Number: return render_rational(e.rational());
        case Op::Constant: return e.named_constant() == NamedConstant::Pi ? "\\pi" : "e";
        case Op::Variable: return render_variable(e.name());
        case Op::Add: {
            std::string out = render_child(kids[0], kids[0].op() == Op::Add);
            for (std::size_t i = 1; i < kids.size(); ++i)
                out += "+" + render_child(kids[i], is_additive(kids[i]) || kids[i].op() == Op::Neg);
            return out;
        }
        case Op::Sub:
            return render(kids[0]) + "-" + render_child(kids[1], is_additive(kids[1]) || kids[1].op() == Op::Neg);
        case Op::Neg: return "-" + render_child(kids[0], is_additive(kids[0]) || kids[0].op() == Op::Neg);
        case Op::Mul: {
            std::string out;
            for (const auto& k : kids) {
                const bool paren = is_additive(k) || k.op() == Op::Neg || k.op() == Op::Mul;
                std::string next = render_child(k, paren);
                if (!out.empty()) {
                    const char first = next.front();
                    const char last = out.back();
                    if (std::isdigit(static_cast<unsigned char>(first)) || first == '.')
                        out += "\\cdot ";
                    else if (std::isalpha(static_cast<unsigned char>(last)) && std::isalpha(static_cast<unsigned char>(first)))
                        out += " ";
                }
                out += next;
            }
            return out;
        }
        case Op::Div: return "\\frac{" + render(kids[0]) + "}{" + render(kids[1]) + "}";
        case Op::Pow: {
            const Expr& base = kids[0];
            bool plain = base.op() == Op::Constant || base.op() == Op::Variable || base.op() == Op::Abs ||
                         (base.op() == Op::Number && render_rational(base.rational()).front() != '\\');
            return render_child(base, !plain) + "^{" + render(kids[1]) + "}";
        }
        case Op::Root:
            if (e.root_index() == 2) return "\\sqrt{" + render(kids[0]) + "}";
            return "\\sqrt[" + std::to_string(e.root_index()) + "]{" + render(kids[0]) + "}";
        case Op::Abs: return "\\left|" + render(kids[0]) + "\\right|";
        case Op::Func: return "\\" + std::string(function_name(e.function())) + wrap(render(kids[0]));
    }
    return {};
}

}  // namespace

std::string render_latex(const Expr& e) { return render(e); }

}  // namespace georl::latex
