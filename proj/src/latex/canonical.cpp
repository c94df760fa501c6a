#include <cmath>

#include "georl/latex_math.hpp"
#include "latex/polynomial.hpp"

namespace georl::latex {

namespace detail {

std::string monomial_key(const Monomial& m) {
    std::string out;
    for (const auto& [key, f] : m) {
        if (!out.empty()) out += '*';
        out += key;
        out += '^';
        out += std::to_string(f.exponent);
    }
    return out;
}

std::string polynomial_key(const Polynomial& p) {
    if (p.terms.empty()) return "0";
    std::string out;
    for (const auto& [mk, t] : p.terms) {
        if (!out.empty()) out += " + ";
        out += t.coeff.str();
        if (!mk.empty()) {
            out += '*';
            out += mk;
        }
    }
    return out;
}

}  // namespace detail

namespace {

using namespace detail;
using Poly = Polynomial;

constexpr long long kMaxExponent = 4096;
constexpr std::size_t kMaxTerms = 4096;
constexpr unsigned kMaxCoefficientBits = 1u << 16;

// Thrown when exact expansion would blow up; the caller keeps the power opaque instead.
struct ExpansionLimit {};

Poly constant(const Rational& c) {
    Poly p;
    if (c != 0) p.terms.emplace("", Term{c, {}});
    return p;
}

bool is_constant(const Poly& p) { return p.terms.empty() || (p.terms.size() == 1 && p.terms.begin()->first.empty()); }

Rational constant_value(const Poly& p) { return p.terms.empty() ? Rational(0) : p.terms.begin()->second.coeff; }

const Rational& leading_coeff(const Poly& p) { return p.terms.begin()->second.coeff; }

void add_term(Poly& acc, const Term& t) {
    if (t.coeff == 0) return;
    const std::string key = monomial_key(t.mono);
    auto it = acc.terms.find(key);
    if (it == acc.terms.end()) {
        acc.terms.emplace(key, t);
        return;
    }
    it->second.coeff += t.coeff;
    if (it->second.coeff == 0) acc.terms.erase(it);
}

Poly add(const Poly& a, const Poly& b) {
    Poly out = a;
    for (const auto& [_, t] : b.terms) add_term(out, t);
    return out;
}

Poly scale(const Poly& a, const Rational& c) {
    if (c == 0) return {};
    Poly out = a;
    for (auto& [_, t] : out.terms) t.coeff *= c;
    return out;
}

Poly negate(const Poly& a) { return scale(a, Rational(-1)); }

Poly single(Term t) {
    Poly p;
    add_term(p, t);
    return p;
}

Atom make_atom(AtomData data) { return std::make_shared<const AtomData>(std::move(data)); }

std::shared_ptr<const Poly> share(Poly p) { return std::make_shared<const Poly>(std::move(p)); }

Atom variable_atom(const std::string& name) {
    AtomData d;
    d.kind = AtomKind::Variable;
    d.name = name;
    d.key = "v:" + name;
    return make_atom(std::move(d));
}

Atom constant_atom(NamedConstant c) {
    AtomData d;
    d.kind = AtomKind::Constant;
    d.constant = c;
    d.key = c == NamedConstant::Pi ? "c:pi" : "c:e";
    return make_atom(std::move(d));
}

Atom argument_atom(AtomKind kind, const std::string& tag, Poly arg) {
    AtomData d;
    d.kind = kind;
    d.key = tag + "(" + polynomial_key(arg) + ")";
    d.arg = share(std::move(arg));
    return make_atom(std::move(d));
}

Atom root_atom(int n, Poly radicand) {
    Atom a = argument_atom(AtomKind::Root, "r" + std::to_string(n), std::move(radicand));
    auto d = *a;
    d.index = n;
    return make_atom(std::move(d));
}

Atom func_atom(Function fn, Poly arg) {
    Atom a = argument_atom(AtomKind::Func, "f:" + std::string(function_name(fn)), std::move(arg));
    auto d = *a;
    d.fn = fn;
    return make_atom(std::move(d));
}

Atom power_atom(Poly base, Poly exponent) {
    AtomData d;
    d.kind = AtomKind::Power;
    d.key = "p(" + polynomial_key(base) + ")(" + polynomial_key(exponent) + ")";
    d.arg = share(std::move(base));
    d.exponent = share(std::move(exponent));
    return make_atom(std::move(d));
}

Poly from_atom(const Atom& a, long long exponent = 1) {
    Term t{Rational(1), {}};
    t.mono.emplace(a->key, Factor{a, exponent});
    return single(std::move(t));
}

Rational rational_pow(const Rational& c, long long q) {
    if (q == 0) return Rational(1);
    if (c == 0) {
        if (q < 0) throw DomainError("division by zero");
        return Rational(0);
    }
    const auto mag = static_cast<unsigned>(q < 0 ? -q : q);
    const Integer num = boost::multiprecision::numerator(c);
    const Integer den = boost::multiprecision::denominator(c);
    const auto bits = std::max<std::size_t>(num == 0 ? 0 : boost::multiprecision::msb(abs(num)),
                                            boost::multiprecision::msb(den));
    if ((bits + 1) * mag > kMaxCoefficientBits) throw ExpansionLimit{};
    Rational r(boost::multiprecision::pow(num, mag), boost::multiprecision::pow(den, mag));
    return q < 0 ? Rational(1) / r : r;
}

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

Poly mul(const Poly& a, const Poly& b);
Poly poly_pow(const Poly& p, long long q);

// Folds exponents that leave an atom's normal range: Root_n(B)^k keeps k in
// [1, n-1] and moves whole multiples into B^(k div n); a Sum atom with a
// positive exponent is multiplied back out.
Poly normalize_term(const Term& raw) {
    Term t{raw.coeff, {}};
    Poly extra = constant(1);
    bool has_extra = false;
    for (const auto& [key, f] : raw.mono) {
        const Atom& a = f.atom;
        if (a->kind == AtomKind::Root && (f.exponent < 1 || f.exponent >= a->index)) {
            const long long q = floor_div(f.exponent, a->index);
            const long long r = f.exponent - q * a->index;
            if (r != 0) t.mono.emplace(key, Factor{a, r});
            extra = mul(extra, poly_pow(*a->arg, q));
            has_extra = true;
            continue;
        }
        if (a->kind == AtomKind::Sum && f.exponent > 0) {
            extra = mul(extra, poly_pow(*a->arg, f.exponent));
            has_extra = true;
            continue;
        }
        t.mono.emplace(key, f);
    }
    if (!has_extra) return single(std::move(t));
    return mul(single(std::move(t)), extra);
}

Poly term_product(const Term& a, const Term& b) {
    Term raw{a.coeff * b.coeff, a.mono};
    for (const auto& [key, f] : b.mono) {
        auto it = raw.mono.find(key);
        if (it == raw.mono.end()) {
            raw.mono.emplace(key, f);
        } else {
            it->second.exponent += f.exponent;
            if (it->second.exponent == 0) raw.mono.erase(it);
        }
    }
    return normalize_term(raw);
}

Poly mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [_, ta] : a.terms)
        for (const auto& [_, tb] : b.terms)
            for (const auto& [_, t] : term_product(ta, tb).terms) add_term(out, t);
    return out;
}

Poly term_pow(const Term& t, long long q) {
    Term raw{rational_pow(t.coeff, q), {}};
    for (const auto& [key, f] : t.mono) {
        const long long e = f.exponent * q;
        if (std::llabs(e) > kMaxExponent * kMaxExponent) throw ExpansionLimit{};
        raw.mono.emplace(key, Factor{f.atom, e});
    }
    return normalize_term(raw);
}

Poly poly_pow(const Poly& p, long long q) {
    if (q == 0) return constant(1);
    if (p.terms.empty()) {
        if (q < 0) throw DomainError("division by zero");
        return {};
    }
    if (p.terms.size() == 1) return term_pow(p.terms.begin()->second, q);
    if (q > 0) {
        Poly result = constant(1);
        Poly base = p;
        long long e = q;
        while (true) {
            if (e & 1) {
                result = mul(result, base);
                if (result.terms.size() > kMaxTerms) throw ExpansionLimit{};
            }
            e >>= 1;
            if (!e) break;
            base = mul(base, base);
            if (base.terms.size() > kMaxTerms) throw ExpansionLimit{};
        }
        return result;
    }
    // Reciprocal of a sum: pull out the leading coefficient so the atom is monic.
    const Rational c = leading_coeff(p);
    Atom sum = argument_atom(AtomKind::Sum, "s", scale(p, Rational(1) / c));
    Term t{rational_pow(c, q), {}};
    t.mono.emplace(sum->key, Factor{sum, q});
    return single(std::move(t));
}

// Splits r = outside^n * inside with inside free of small n-th power factors.
std::pair<Integer, Integer> extract_power(Integer r, int n) {
    Integer outside = 1, inside = 1;
    for (unsigned p = 2; p <= 100000; p = (p == 2 ? 3 : p + 2)) {
        const Integer pp = Integer(p) * p;
        if (pp > r) break;
        int m = 0;
        while (r % p == 0) {
            r /= p;
            ++m;
        }
        if (m) {
            outside *= boost::multiprecision::pow(Integer(p), static_cast<unsigned>(m / n));
            inside *= boost::multiprecision::pow(Integer(p), static_cast<unsigned>(m % n));
        }
    }
    if (r > 1) {
        // Remaining cofactor: accept it whole if it is an exact n-th power.
        const double approx = std::round(std::pow(r.convert_to<double>(), 1.0 / n));
        bool matched = false;
        if (std::isfinite(approx) && approx < 9.0e15) {
            for (long long k = static_cast<long long>(approx) - 1; k <= static_cast<long long>(approx) + 1; ++k) {
                if (k > 1 && boost::multiprecision::pow(Integer(k), static_cast<unsigned>(n)) == r) {
                    outside *= k;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) inside *= r;
    }
    return {outside, inside};
}

Poly root_of(const Poly& b, int n) {
    if (b.terms.empty()) return {};
    if (is_constant(b)) {
        const Rational c = constant_value(b);
        if (c < 0) {
            if (n % 2 == 1) return negate(root_of(constant(-c), n));
            return from_atom(root_atom(n, b));
        }
        const Integer num = boost::multiprecision::numerator(c);
        const Integer den = boost::multiprecision::denominator(c);
        // root(p/q) = root(p q^(n-1)) / q
        auto [outside, inside] = extract_power(num * boost::multiprecision::pow(den, static_cast<unsigned>(n - 1)), n);
        const Rational coeff(outside, den);
        if (inside == 1) return constant(coeff);
        Term t{coeff, {}};
        Atom a = root_atom(n, constant(Rational(inside)));
        t.mono.emplace(a->key, Factor{a, 1});
        return single(std::move(t));
    }
    const Rational mag = abs(leading_coeff(b));
    Poly unit = scale(b, Rational(1) / mag);
    Rational sign = 1;
    if (n % 2 == 1 && leading_coeff(unit) < 0) {
        unit = negate(unit);
        sign = -1;
    }
    return scale(mul(root_of(constant(mag), n), from_atom(root_atom(n, std::move(unit)))), sign);
}

bool factor_nonnegative(const Factor& f) {
    if (f.exponent % 2 == 0) return true;
    const AtomData& a = *f.atom;
    switch (a.kind) {
        case AtomKind::Constant:
        case AtomKind::Abs: return true;
        case AtomKind::Root:
            return a.index % 2 == 0 || (is_constant(*a.arg) && constant_value(*a.arg) > 0);
        case AtomKind::Power: return is_constant(*a.arg) && constant_value(*a.arg) > 0;
        default: return false;
    }
}

Poly abs_of(const Poly& b) {
    if (b.terms.empty()) return {};
    if (is_constant(b)) return constant(abs(constant_value(b)));
    if (b.terms.size() == 1) {
        const Term& t = b.terms.begin()->second;
        const Rational mag = abs(t.coeff);
        bool nonneg = true;
        for (const auto& [_, f] : t.mono) nonneg = nonneg && factor_nonnegative(f);
        Poly unit = single(Term{Rational(1), t.mono});
        if (nonneg) return scale(unit, mag);
        return scale(from_atom(argument_atom(AtomKind::Abs, "a", std::move(unit))), mag);
    }
    const Rational c = leading_coeff(b);
    return scale(from_atom(argument_atom(AtomKind::Abs, "a", scale(b, Rational(1) / c))), abs(c));
}

bool is_atom(const Poly& p, const std::string& key) {
    if (p.terms.size() != 1) return false;
    const Term& t = p.terms.begin()->second;
    return t.coeff == 1 && t.mono.size() == 1 && t.mono.begin()->first == key && t.mono.begin()->second.exponent == 1;
}

Poly func_of(Function fn, const Poly& arg) {
    if (fn == Function::Log) fn = Function::Ln;
    switch (fn) {
        case Function::Sin:
        case Function::Tan:
            if (arg.terms.empty()) return {};
            // Odd functions: sin(-u) = -sin(u).
            if (leading_coeff(arg) < 0) return negate(from_atom(func_atom(fn, negate(arg))));
            break;
        case Function::Cos:
            if (arg.terms.empty()) return constant(1);
            if (leading_coeff(arg) < 0) return from_atom(func_atom(fn, negate(arg)));
            break;
        case Function::Ln:
            if (is_constant(arg) && constant_value(arg) == 1) return {};
            if (is_atom(arg, "c:e")) return constant(1);
            break;
        default: break;
    }
    return from_atom(func_atom(fn, arg));
}

Poly pow_general(const Poly& base, const Poly& exponent) {
    if (is_constant(exponent)) {
        const Rational q = constant_value(exponent);
        if (q == 0) return constant(1);
        if (is_constant(base) && constant_value(base) == 1) return constant(1);
        const Integer num = boost::multiprecision::numerator(q);
        const Integer den = boost::multiprecision::denominator(q);
        if (abs(num) <= kMaxExponent && den <= 64) {
            try {
                const auto m = num.convert_to<long long>();
                const auto n = den.convert_to<int>();
                if (n == 1) return poly_pow(base, m);
                return poly_pow(root_of(base, n), m);
            } catch (const ExpansionLimit&) {
            }
        }
        if (base.terms.empty() && q < 0) throw DomainError("division by zero");
        return from_atom(power_atom(base, exponent));
    }
    if (is_constant(base) && constant_value(base) == 1) return constant(1);
    return from_atom(power_atom(base, exponent));
}

Poly canon(const Expr& e) {
    const auto kids = e.children();
    switch (e.op()) {
        case Op::Number: return constant(e.rational());
        case Op::Constant: return from_atom(constant_atom(e.named_constant()));
        case Op::Variable: return from_atom(variable_atom(e.name()));
        case Op::Add: {
            Poly acc;
            for (const auto& k : kids) acc = add(acc, canon(k));
            return acc;
        }
        case Op::Sub: return add(canon(kids[0]), negate(canon(kids[1])));
        case Op::Neg: return negate(canon(kids[0]));
        case Op::Mul: {
            Poly acc = constant(1);
            for (const auto& k : kids) acc = mul(acc, canon(k));
            return acc;
        }
        case Op::Div: {
            const Poly den = canon(kids[1]);
            if (den.terms.empty()) throw DomainError("division by zero");
            try {
                return mul(canon(kids[0]), poly_pow(den, -1));
            } catch (const ExpansionLimit&) {
                return mul(canon(kids[0]), from_atom(power_atom(den, constant(-1))));
            }
        }
        case Op::Pow: return pow_general(canon(kids[0]), canon(kids[1]));
        case Op::Root: {
            try {
                return root_of(canon(kids[0]), e.root_index());
            } catch (const ExpansionLimit&) {
                return from_atom(root_atom(e.root_index(), canon(kids[0])));
            }
        }
        case Op::Abs: return abs_of(canon(kids[0]));
        case Op::Func: return func_of(e.function(), canon(kids[0]));
    }
    throw DomainError("unknown node");
}

// ---- back to an expression tree ----

Expr poly_expr(const Poly& p);

Expr number_expr(const Rational& r) {
    const Integer den = boost::multiprecision::denominator(r);
    Integer d = den;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d == 1) return Expr::number(r);
    return Expr::div(Expr::number(Rational(boost::multiprecision::numerator(r))), Expr::number(Rational(den)));
}

Expr atom_expr(const AtomData& a) {
    switch (a.kind) {
        case AtomKind::Constant: return Expr::constant(a.constant);
        case AtomKind::Variable: return Expr::variable(a.name);
        case AtomKind::Root: return Expr::root(a.index, poly_expr(*a.arg));
        case AtomKind::Sum: return poly_expr(*a.arg);
        case AtomKind::Func: return Expr::func(a.fn, poly_expr(*a.arg));
        case AtomKind::Abs: return Expr::abs(poly_expr(*a.arg));
        case AtomKind::Power: return Expr::pow(poly_expr(*a.arg), poly_expr(*a.exponent));
    }
    return Expr::integer(0);
}

Expr term_expr(const Term& t) {
    std::vector<Expr> factors;
    const Rational mag = abs(t.coeff);
    if (t.mono.empty() || mag != 1) factors.push_back(number_expr(mag));
    for (const auto& [_, f] : t.mono) {
        Expr base = atom_expr(*f.atom);
        if (f.exponent == 1)
            factors.push_back(std::move(base));
        else if (f.exponent > 0)
            factors.push_back(Expr::pow(std::move(base), Expr::integer(f.exponent)));
        else
            factors.push_back(Expr::pow(std::move(base), Expr::neg(Expr::integer(-f.exponent))));
    }
    Expr body = factors.size() == 1 ? factors.front() : Expr::mul(std::move(factors));
    return t.coeff < 0 ? Expr::neg(std::move(body)) : body;
}

Expr poly_expr(const Poly& p) {
    if (p.terms.empty()) return Expr::integer(0);
    std::vector<Expr> terms;
    for (const auto& [_, t] : p.terms) terms.push_back(term_expr(t));
    return terms.size() == 1 ? terms.front() : Expr::add(std::move(terms));
}

bool poly_has_opaque(const Poly& p) {
    for (const auto& [_, t] : p.terms)
        for (const auto& [_, f] : t.mono)
            if (f.atom->kind != AtomKind::Variable && f.atom->kind != AtomKind::Constant) return true;
    return false;
}

void poly_variables(const Poly& p, std::set<std::string>& out) {
    for (const auto& [_, t] : p.terms) {
        for (const auto& [_, f] : t.mono) {
            const AtomData& a = *f.atom;
            if (a.kind == AtomKind::Variable) out.insert(a.name);
            if (a.arg) poly_variables(*a.arg, out);
            if (a.exponent) poly_variables(*a.exponent, out);
        }
    }
}

}  // namespace

CanonicalForm::CanonicalForm(std::shared_ptr<const detail::Polynomial> poly)
    : poly_(std::move(poly)), key_(polynomial_key(*poly_)) {}

const std::string& CanonicalForm::key() const { return key_; }

Expr CanonicalForm::to_expr() const { return poly_expr(*poly_); }

bool CanonicalForm::has_opaque_atoms() const { return poly_has_opaque(*poly_); }

bool CanonicalForm::is_zero() const { return poly_->terms.empty(); }

std::optional<Rational> CanonicalForm::as_rational() const {
    if (!is_constant(*poly_)) return std::nullopt;
    return constant_value(*poly_);
}

std::set<std::string> CanonicalForm::variables() const {
    std::set<std::string> out;
    poly_variables(*poly_, out);
    return out;
}

CanonicalForm canonicalize(const Expr& e) { return CanonicalForm(std::make_shared<const Polynomial>(canon(e))); }

namespace detail {

Polynomial difference(const Polynomial& a, const Polynomial& b) { return add(a, negate(b)); }

}  // namespace detail

}  // namespace georl::latex
