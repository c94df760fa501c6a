#include <doctest.h>

#include <fstream>
#include <sstream>

#include "expr_oracle.hpp"
#include "georl/latex_math.hpp"

using namespace georl::latex;

namespace {

Expr parse(const char* s) { return parse_latex(s).ast; }
std::string key(const char* s) { return canonicalize(parse(s)).key(); }

struct LabelledPair {
    bool equal;
    std::string lhs, rhs;
};

std::vector<LabelledPair> read_pairs() {
    std::ifstream in(GEORL_TEST_DATA "/equivalence_pairs.tsv");
    REQUIRE(in);
    std::vector<LabelledPair> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string label, a, b;
        std::getline(ss, label, '\t');
        std::getline(ss, a, '\t');
        std::getline(ss, b, '\t');
        out.push_back({label == "1", a, b});
    }
    return out;
}

}  // namespace

TEST_CASE("parse builds the documented trees") {
    CHECK(parse("\\frac{\\pi}{2}") == Expr::div(Expr::constant(NamedConstant::Pi), Expr::integer(2)));
    CHECK(parse("x") == Expr::variable("x"));
    CHECK(parse("2\\pi r") ==
          Expr::mul({Expr::integer(2), Expr::constant(NamedConstant::Pi), Expr::variable("r")}));
    CHECK(parse("  \\left( x \\right) ") == Expr::variable("x"));
    CHECK(parse("{{x}}") == Expr::variable("x"));
    CHECK(parse("a_{1}") == Expr::variable("a_1"));
}

TEST_CASE("rationals are stored exactly") {
    const Expr e = parse("0.1");
    REQUIRE(e.op() == Op::Number);
    CHECK(e.rational() == Rational(1, 10));
    CHECK(parse("007") == Expr::integer(7));
}

TEST_CASE("parse errors carry an offset") {
    CHECK_THROWS_AS(parse_latex(""), ParseError);
    CHECK_THROWS_AS(parse_latex("x+"), ParseError);
    CHECK_THROWS_AS(parse_latex("\\frac{1}"), ParseError);
    CHECK_THROWS_AS(parse_latex("\\unknowncommand"), ParseError);
    try {
        parse_latex("1+)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 2);
        CHECK_FALSE(e.expected().empty());
    }
}

TEST_CASE("canonical forms collect like terms and expand") {
    CHECK(key("2\\pi r") == key("(2r)\\pi"));
    CHECK(canonicalize(Expr::add({Expr::variable("x"), Expr::integer(0)})) == canonicalize(Expr::variable("x")));
    CHECK(canonicalize(Expr::add({Expr::variable("x"), Expr::variable("x")})) ==
          canonicalize(Expr::mul({Expr::integer(2), Expr::variable("x")})));
    CHECK(key("(x+1)^2") == key("x^2+2x+1"));
    CHECK(key("\\frac{1}{\\sqrt{2}}") == key("\\frac{\\sqrt{2}}{2}"));
    CHECK(key("\\sqrt{8}") == key("2\\sqrt{2}"));
    CHECK(key("0.1+0.2") == key("0.3"));
    CHECK(canonicalize(parse("x-x")).is_zero());
    CHECK(canonicalize(parse("\\frac{6}{4}")).as_rational() == Rational(3, 2));
}

TEST_CASE("division by a literal zero is a domain error") {
    CHECK_THROWS_AS(canonicalize(parse("\\frac{1}{0}")), DomainError);
    CHECK_THROWS_AS(canonicalize(parse("\\frac{x}{2-2}")), DomainError);
}

TEST_CASE("Add(x, x) matches Mul(2, x) at ten random points") {
    std::mt19937_64 rng(7);
    const Expr sum = Expr::add({Expr::variable("x"), Expr::variable("x")});
    const Expr prod = Expr::mul({Expr::integer(2), Expr::variable("x")});
    for (int i = 0; i < 10; ++i) {
        const Env env{{"x", std::uniform_real_distribution<double>(-10, 10)(rng)}};
        CHECK(evaluate(sum, env) == evaluate(prod, env));
    }
}

TEST_CASE("equivalence examples") {
    auto eq = [](const char* a, const char* b) { return symbolically_equal(parse_latex(a), parse_latex(b)); };
    CHECK(eq("2\\pi r", "(2r)\\pi").equal);
    CHECK(eq("x", "x").equal);
    CHECK(eq("(x+1)^2", "x^2+2x+1").equal);
    CHECK_FALSE(eq("(x+1)^2", "x^2+1").equal);
    CHECK(eq("x^2-1", "(x-1)(x+1)").equal);
    CHECK_FALSE(eq("x^2", "x^3").equal);
    CHECK_FALSE(eq("x^2", "x^3").fallback_used);
    const auto trig = eq("\\sin^2 x + \\cos^2 x", "1");
    CHECK(trig.equal);
    CHECK(trig.fallback_used);
}

TEST_CASE("labelled equivalence fixture") {
    const auto pairs = read_pairs();
    CHECK(pairs.size() >= 60);
    for (const auto& p : pairs) {
        CAPTURE(p.lhs);
        CAPTURE(p.rhs);
        const auto a = parse_latex(p.lhs), b = parse_latex(p.rhs);
        CHECK(symbolically_equal(a, b).equal == p.equal);
        CHECK(symbolically_equal(b, a).equal == p.equal);
    }
}

TEST_CASE("evaluate") {
    CHECK(evaluate(parse("\\frac{\\pi}{2}"), {}) == 1.5707963267948966);
    CHECK(evaluate(parse("x+1"), {{"x", 2.0}}) == 3.0);
    CHECK_THROWS_AS(evaluate(parse("\\sqrt{x}"), {{"x", -1.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(parse("\\frac{1}{x}"), {{"x", 0.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(parse("\\ln(x)"), {{"x", 0.0}}), EvalError);
    CHECK(evaluate(parse("\\sqrt[3]{-8}"), {}) == doctest::Approx(-2.0));
    CHECK(evaluate(parse("45^{\\circ}"), {}) == doctest::Approx(M_PI / 4));
}

TEST_CASE("evaluate agrees with the independent evaluator on generated trees") {
    oracle::ExprGen gen(11);
    std::mt19937_64 rng(12);
    int compared = 0;
    for (int i = 0; i < 500; ++i) {
        const Expr e = gen();
        for (int k = 0; k < 5; ++k) {
            const auto env = oracle::random_env(rng);
            const oracle::Scaled ref = oracle::scaled_eval(e, env);
            if (!std::isfinite(ref.value)) continue;
            double got;
            try {
                got = evaluate(e, Env(env.begin(), env.end()));
            } catch (const EvalError&) {
                FAIL_CHECK("library rejects a point the oracle accepts: " << render_latex(e));
                continue;
            }
            CAPTURE(render_latex(e));
            CHECK(oracle::agree(ref, {got, ref.scale}, 1e-12));
            ++compared;
        }
    }
    CHECK(compared > 1000);
}

TEST_CASE("render then parse is the identity on generated trees") {
    oracle::ExprGen gen(3);
    for (int i = 0; i < 2000; ++i) {
        const Expr e = gen();
        const std::string src = render_latex(e);
        CAPTURE(src);
        CHECK(parse_latex(src).ast == e);
    }
}

TEST_CASE("canonicalization is idempotent on generated trees") {
    oracle::ExprGen gen(5);
    for (int i = 0; i < 2000; ++i) {
        const Expr e = gen();
        CAPTURE(render_latex(e));
        try {
            const CanonicalForm once = canonicalize(e);
            CHECK(canonicalize(once.to_expr()) == once);
        } catch (const DomainError&) {
        }
    }
}

TEST_CASE("canonical equality implies numeric agreement") {
    oracle::ExprGen gen(9);
    std::mt19937_64 rng(10);
    for (int i = 0; i < 1000; ++i) {
        const Expr e = gen();
        Expr c = e;
        try {
            c = canonicalize(e).to_expr();
        } catch (const DomainError&) {
            continue;
        }
        CAPTURE(render_latex(e));
        CAPTURE(render_latex(c));
        for (int k = 0; k < 20; ++k) {
            const auto env = oracle::random_env(rng);
            const auto a = oracle::scaled_eval(e, env);
            if (!std::isfinite(a.value)) continue;
            CHECK(oracle::agree(a, oracle::scaled_eval(c, env), 1e-12));
        }
    }
}

TEST_CASE("equivalence is reflexive and symmetric on generated trees") {
    oracle::ExprGen gen(13);
    for (int i = 0; i < 200; ++i) {
        const MathExpr a{gen(), ""}, b{gen(), ""};
        CAPTURE(render_latex(a.ast));
        CAPTURE(render_latex(b.ast));
        CHECK(symbolically_equal(a, a).equal);
        CHECK(symbolically_equal(a, b).equal == symbolically_equal(b, a).equal);
    }
}
