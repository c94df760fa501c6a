#include "georl/latex_math.hpp"

#include <cassert>

namespace georl::latex {

struct Expr::Node {
    Op op;
    Rational value;
    double approx = 0.0;
    NamedConstant constant = NamedConstant::Pi;
    std::string name;
    Function fn = Function::Sin;
    int index = 0;
    std::vector<Expr> children;
};

namespace {

std::string describe_found(const std::string& found) { return found.empty() ? "end of input" : "'" + found + "'"; }

std::string join_expected(const std::vector<std::string>& expected) {
    std::string out;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += ", ";
        out += expected[i];
    }
    return out;
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found)
    : std::runtime_error("unexpected " + describe_found(found) + " at offset " + std::to_string(offset) +
                         "; expected " + join_expected(expected)),
      offset_(offset),
      expected_(std::move(expected)) {}

std::string_view function_name(Function f) {
    switch (f) {
        case Function::Sin: return "sin";
        case Function::Cos: return "cos";
        case Function::Tan: return "tan";
        case Function::Log: return "log";
        case Function::Ln: return "ln";
    }
    return "?";
}

Expr Expr::number(const Rational& value) {
    assert(value >= 0);
    auto n = std::make_shared<Node>();
    n->op = Op::Number;
    n->value = value;
    n->approx = value.convert_to<double>();
    return Expr(std::move(n));
}

Expr Expr::integer(long long value) {
    if (value < 0) return neg(number(Rational(-value)));
    return number(Rational(value));
}

Expr Expr::constant(NamedConstant c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->constant = c;
    return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Variable;
    n->name = std::move(name);
    return Expr(std::move(n));
}

namespace {

template <class Node>
std::shared_ptr<Node> with_children(Op op, std::vector<Expr> children) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->children = std::move(children);
    return n;
}

}  // namespace

Expr Expr::add(std::vector<Expr> terms) {
    assert(terms.size() >= 2);
    return Expr(with_children<Node>(Op::Add, std::move(terms)));
}

Expr Expr::sub(Expr lhs, Expr rhs) { return Expr(with_children<Node>(Op::Sub, {std::move(lhs), std::move(rhs)})); }

Expr Expr::mul(std::vector<Expr> factors) {
    assert(factors.size() >= 2);
    return Expr(with_children<Node>(Op::Mul, std::move(factors)));
}

Expr Expr::div(Expr numerator, Expr denominator) {
    return Expr(with_children<Node>(Op::Div, {std::move(numerator), std::move(denominator)}));
}

Expr Expr::pow(Expr base, Expr exponent) {
    return Expr(with_children<Node>(Op::Pow, {std::move(base), std::move(exponent)}));
}

Expr Expr::neg(Expr operand) { return Expr(with_children<Node>(Op::Neg, {std::move(operand)})); }

Expr Expr::root(int index, Expr radicand) {
    assert(index >= 2);
    auto n = with_children<Node>(Op::Root, {std::move(radicand)});
    n->index = index;
    return Expr(std::move(n));
}

Expr Expr::abs(Expr operand) { return Expr(with_children<Node>(Op::Abs, {std::move(operand)})); }

Expr Expr::func(Function f, Expr argument) {
    auto n = with_children<Node>(Op::Func, {std::move(argument)});
    n->fn = f;
    return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
const Rational& Expr::rational() const { return node_->value; }
double Expr::approx() const { return node_->approx; }
NamedConstant Expr::named_constant() const { return node_->constant; }
const std::string& Expr::name() const { return node_->name; }
Function Expr::function() const { return node_->fn; }
int Expr::root_index() const { return node_->index; }
std::span<const Expr> Expr::children() const { return node_->children; }

std::size_t Expr::node_count() const {
    std::size_t n = 1;
    for (const auto& c : children()) n += c.node_count();
    return n;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.op != y.op) return false;
    switch (x.op) {
        case Op::Number:
            if (x.value != y.value) return false;
            break;
        case Op::Constant:
            if (x.constant != y.constant) return false;
            break;
        case Op::Variable:
            if (x.name != y.name) return false;
            break;
        case Op::Root:
            if (x.index != y.index) return false;
            break;
        case Op::Func:
            if (x.fn != y.fn) return false;
            break;
        default: break;
    }
    if (x.children.size() != y.children.size()) return false;
    for (std::size_t i = 0; i < x.children.size(); ++i)
        if (!(x.children[i] == y.children[i])) return false;
    return true;
}

namespace {

void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e.op() == Op::Variable) out.insert(e.name());
    for (const auto& c : e.children()) collect_variables(c, out);
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> out;
    collect_variables(e, out);
    return out;
}

}  // namespace georl::latex
