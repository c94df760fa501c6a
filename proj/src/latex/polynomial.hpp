#pragma once

#include <map>
#include <memory>
#include <string>

#include "georl/latex_math.hpp"

namespace georl::latex::detail {

// Atom kinds of the canonical form. Variables and named constants are plain
// indeterminates; everything else is opaque to polynomial arithmetic.
enum class AtomKind { Constant, Variable, Root, Sum, Func, Abs, Power };

struct Polynomial;

struct AtomData {
    AtomKind kind = AtomKind::Variable;
    std::string key;
    std::string name;
    NamedConstant constant = NamedConstant::Pi;
    Function fn = Function::Sin;
    int index = 0;
    std::shared_ptr<const Polynomial> arg;       // Root radicand, Sum, Func/Abs argument, Power base
    std::shared_ptr<const Polynomial> exponent;  // Power only
};

using Atom = std::shared_ptr<const AtomData>;

struct Factor {
    Atom atom;
    long long exponent = 0;
};

// Factors keyed (and therefore ordered) by atom key.
using Monomial = std::map<std::string, Factor>;

struct Term {
    Rational coeff;
    Monomial mono;
};

// Terms keyed (and ordered) by monomial key; no zero coefficients.
struct Polynomial {
    std::map<std::string, Term> terms;
};

std::string monomial_key(const Monomial& m);
std::string polynomial_key(const Polynomial& p);

Polynomial difference(const Polynomial& a, const Polynomial& b);

}  // namespace georl::latex::detail
