#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace georl::latex {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Input outside the supported LaTeX grammar.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found);

    std::size_t offset() const { return offset_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

/// Exact folding hit a literal division by zero.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floating-point evaluation left the real domain (x/0, sqrt of a negative, log of a non-positive).
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Op { Number, Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Root, Abs, Func };
enum class NamedConstant { Pi, E };
enum class Function { Sin, Cos, Tan, Log, Ln };

std::string_view function_name(Function f);

/// Immutable expression tree node. Copies share structure.
class Expr {
public:
    static Expr number(const Rational& value);
    static Expr integer(long long value);
    static Expr constant(NamedConstant c);
    static Expr variable(std::string name);
    static Expr add(std::vector<Expr> terms);
    static Expr sub(Expr lhs, Expr rhs);
    static Expr mul(std::vector<Expr> factors);
    static Expr div(Expr numerator, Expr denominator);
    static Expr pow(Expr base, Expr exponent);
    static Expr neg(Expr operand);
    static Expr root(int index, Expr radicand);
    static Expr abs(Expr operand);
    static Expr func(Function f, Expr argument);

    Op op() const;
    const Rational& rational() const;  // Number only
    double approx() const;             // Number only, nearest double
    NamedConstant named_constant() const;
    const std::string& name() const;  // Variable only
    Function function() const;
    int root_index() const;
    std::span<const Expr> children() const;
    const Expr& child(std::size_t i) const { return children()[i]; }

    std::size_t node_count() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Parsed LaTeX: the tree plus the text it came from.
struct MathExpr {
    Expr ast;
    std::string source;
};

MathExpr parse_latex(std::string_view src);

/// LaTeX text that parses back to the same tree.
std::string render_latex(const Expr& e);

std::set<std::string> free_variables(const Expr& e);

namespace detail {
struct Polynomial;
}

/// Sum-of-products normal form with exact rational coefficients.
///
/// Commutative operands are ordered by a fixed key order, like terms are
/// collected, perfect powers are pulled out of roots and denominators are
/// rationalized where that is valid on the expression's real domain.
/// Non-polynomial pieces (functions, absolute values, symbolic exponents,
/// reciprocals of sums) become opaque atoms over canonical arguments.
class CanonicalForm {
public:
    explicit CanonicalForm(std::shared_ptr<const detail::Polynomial> poly);

    /// Deterministic text key; two forms are equal iff their keys are equal.
    const std::string& key() const;
    Expr to_expr() const;

    /// True when some atom is not a plain variable or named constant.
    bool has_opaque_atoms() const;
    bool is_zero() const;
    std::optional<Rational> as_rational() const;
    std::set<std::string> variables() const;

    const detail::Polynomial& polynomial() const { return *poly_; }

    friend bool operator==(const CanonicalForm& a, const CanonicalForm& b) { return a.key() == b.key(); }

private:
    std::shared_ptr<const detail::Polynomial> poly_;
    std::string key_;
};

CanonicalForm canonicalize(const Expr& e);
inline CanonicalForm canonicalize(const MathExpr& e) { return canonicalize(e.ast); }

using Env = std::unordered_map<std::string, double>;

/// Double-precision evaluation. Every free variable must be bound in `env`.
double evaluate(const Expr& e, const Env& env);
inline double evaluate(const MathExpr& e, const Env& env) { return evaluate(e.ast, env); }

struct EquivalenceOptions {
    int samples = 16;
    std::uint64_t seed = 1;
    double lower = -10.0;
    double upper = 10.0;
    double rel_tol = 1e-9;
    // Agreement floor for values that are zero up to rounding, e.g. sin(pi).
    double abs_tol = 1e-12;
    int max_draws_per_sample = 64;
};

struct Equivalence {
    bool equal = false;
    bool fallback_used = false;

    explicit operator bool() const { return equal; }
};

/// Canonical comparison first. When the canonical difference is a nonzero
/// Laurent polynomial in variables and named constants the answer is exact;
/// otherwise both sides are sampled at seeded points of their common domain.
Equivalence symbolically_equal(const MathExpr& a, const MathExpr& b, const EquivalenceOptions& opts = {});

/// Numeric sampling comparison alone.
bool numerically_equal(const Expr& a, const Expr& b, const EquivalenceOptions& opts = {});

}  // namespace georl::latex
