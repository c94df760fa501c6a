#include <cmath>
#include <numbers>

#include "georl/latex_math.hpp"

namespace georl::latex {

namespace {

double finite(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string(what) + " is not finite");
    return v;
}

double eval(const Expr& e, const Env& env) {
    const auto kids = e.children();
    switch (e.op()) {
        case Op::Number: return e.approx();
        case Op::Constant: return e.named_constant() == NamedConstant::Pi ? std::numbers::pi : std::numbers::e;
        case Op::Variable: {
            auto it = env.find(e.name());
            if (it == env.end()) throw EvalError("unbound variable " + e.name());
            return it->second;
        }
        case Op::Add: {
            double s = 0.0;
            for (const auto& k : kids) s += eval(k, env);
            return finite(s, "sum");
        }
        case Op::Sub: return finite(eval(kids[0], env) - eval(kids[1], env), "difference");
        case Op::Mul: {
            double p = 1.0;
            for (const auto& k : kids) p *= eval(k, env);
            return finite(p, "product");
        }
        case Op::Div: {
            const double den = eval(kids[1], env);
            if (den == 0.0) throw EvalError("division by zero");
            return finite(eval(kids[0], env) / den, "quotient");
        }
        case Op::Pow: {
            const double base = eval(kids[0], env);
            const double ex = eval(kids[1], env);
            if (base == 0.0 && ex < 0.0) throw EvalError("zero to a negative power");
            if (base < 0.0 && ex != std::trunc(ex)) throw EvalError("negative base with non-integer exponent");
            return finite(std::pow(base, ex), "power");
        }
        case Op::Neg: return -eval(kids[0], env);
        case Op::Root: {
            const double x = eval(kids[0], env);
            const int n = e.root_index();
            if (n == 2) {
                if (x < 0.0) throw EvalError("square root of a negative number");
                return std::sqrt(x);
            }
            if (n == 3) return std::cbrt(x);
            if (x < 0.0) {
                if (n % 2 == 0) throw EvalError("even root of a negative number");
                return -std::pow(-x, 1.0 / n);
            }
            return std::pow(x, 1.0 / n);
        }
        case Op::Abs: return std::abs(eval(kids[0], env));
        case Op::Func: {
            const double x = eval(kids[0], env);
            switch (e.function()) {
                case Function::Sin: return std::sin(x);
                case Function::Cos: return std::cos(x);
                case Function::Tan:
                    if (std::cos(x) == 0.0) throw EvalError("tangent pole");
                    return finite(std::tan(x), "tangent");
                case Function::Log:
                case Function::Ln:
                    if (x <= 0.0) throw EvalError("logarithm of a non-positive number");
                    return std::log(x);
            }
        }
    }
    throw EvalError("unknown node");
}

}  // namespace

double evaluate(const Expr& e, const Env& env) { return eval(e, env); }

}  // namespace georl::latex
