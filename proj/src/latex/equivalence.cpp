#include <cmath>
#include <random>

#include "georl/latex_math.hpp"
#include "latex/polynomial.hpp"

namespace georl::latex {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

bool close(double a, double b, const EquivalenceOptions& opts) {
    const double diff = std::abs(a - b);
    return diff <= opts.abs_tol || diff <= opts.rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

bool numerically_equal(const Expr& a, const Expr& b, const EquivalenceOptions& opts) {
    std::set<std::string> vars = free_variables(a);
    vars.merge(free_variables(b));
    if (vars.empty()) {
        try {
            return close(evaluate(a, {}), evaluate(b, {}), opts);
        } catch (const EvalError&) {
            return false;
        }
    }
    std::mt19937_64 rng(opts.seed);
    Env env;
    int agreed = 0;
    const long long budget = static_cast<long long>(opts.samples) * opts.max_draws_per_sample;
    for (long long draw = 0; draw < budget && agreed < opts.samples; ++draw) {
        for (const auto& v : vars) env[v] = uniform(rng, opts.lower, opts.upper);
        double va = 0.0, vb = 0.0;
        try {
            va = evaluate(a, env);
            vb = evaluate(b, env);
        } catch (const EvalError&) {
            continue;  // outside the common domain
        }
        if (!close(va, vb, opts)) return false;
        ++agreed;
    }
    return agreed == opts.samples;
}

Equivalence symbolically_equal(const MathExpr& a, const MathExpr& b, const EquivalenceOptions& opts) {
    try {
        const CanonicalForm ca = canonicalize(a);
        const CanonicalForm cb = canonicalize(b);
        if (ca == cb) return {true, false};
        const CanonicalForm diff(
            std::make_shared<const detail::Polynomial>(detail::difference(ca.polynomial(), cb.polynomial())));
        if (!diff.has_opaque_atoms()) return {false, false};
    } catch (const DomainError&) {
    }
    return {numerically_equal(a.ast, b.ast, opts), true};
}

}  // namespace georl::latex
