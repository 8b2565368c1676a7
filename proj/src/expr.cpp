#include "leglab/expr.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace leglab::expr {

namespace {

NodePtr make(Op op, std::vector<NodePtr> args = {})
{
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
}

NodePtr num(double v)
{
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
}

NodePtr var(int i)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = i;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Light folding keeps derivative trees small.
NodePtr add(NodePtr a, NodePtr b)
{
    if (is_const(a, 0.0))
        return b;
    if (is_const(b, 0.0))
        return a;
    if (a->op == Op::Const && b->op == Op::Const)
        return num(a->value + b->value);
    return make(Op::Add, {std::move(a), std::move(b)});
}

NodePtr sub(NodePtr a, NodePtr b)
{
    if (is_const(b, 0.0))
        return a;
    if (a->op == Op::Const && b->op == Op::Const)
        return num(a->value - b->value);
    return make(Op::Sub, {std::move(a), std::move(b)});
}

NodePtr mul(NodePtr a, NodePtr b)
{
    if (is_const(a, 0.0) || is_const(b, 0.0))
        return num(0.0);
    if (is_const(a, 1.0))
        return b;
    if (is_const(b, 1.0))
        return a;
    if (a->op == Op::Const && b->op == Op::Const)
        return num(a->value * b->value);
    return make(Op::Mul, {std::move(a), std::move(b)});
}

NodePtr divide(NodePtr a, NodePtr b)
{
    if (is_const(a, 0.0))
        return num(0.0);
    if (is_const(b, 1.0))
        return a;
    return make(Op::Div, {std::move(a), std::move(b)});
}

NodePtr neg(NodePtr a)
{
    if (a->op == Op::Const)
        return num(-a->value);
    return make(Op::Neg, {std::move(a)});
}

NodePtr unary(Op op, NodePtr a) { return make(op, {std::move(a)}); }

NodePtr branch(NodePtr c, NodePtr a, NodePtr b)
{
    if (a->op == Op::Const && b->op == Op::Const && a->value == b->value)
        return a;
    return make(Op::If, {std::move(c), std::move(a), std::move(b)});
}

double eval(const Node& n, std::span<const double> x)
{
    auto a = [&](std::size_t i) { return eval(*n.args[i], x); };
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[std::size_t(n.var)];
    case Op::Add: return a(0) + a(1);
    case Op::Sub: return a(0) - a(1);
    case Op::Mul: return a(0) * a(1);
    case Op::Div: return a(0) / a(1);
    case Op::Pow: return std::pow(a(0), a(1));
    case Op::Neg: return -a(0);
    case Op::Sin: return std::sin(a(0));
    case Op::Cos: return std::cos(a(0));
    case Op::Tan: return std::tan(a(0));
    case Op::Exp: return std::exp(a(0));
    case Op::Log: return std::log(a(0));
    case Op::Sqrt: return std::sqrt(a(0));
    case Op::Abs: return std::abs(a(0));
    case Op::Tanh: return std::tanh(a(0));
    case Op::Min: return std::min(a(0), a(1));
    case Op::Max: return std::max(a(0), a(1));
    case Op::If: return a(0) > 0.0 ? a(1) : a(2);
    }
    return 0.0;
}

bool depends(const Node& n, int i)
{
    if (n.op == Op::Var)
        return n.var == i;
    for (const auto& c : n.args)
        if (depends(*c, i))
            return true;
    return false;
}

NodePtr diff(const NodePtr& p, int i)
{
    const Node& n = *p;
    if (!depends(n, i))
        return num(0.0);
    auto A = [&](std::size_t k) { return n.args[k]; };
    auto D = [&](std::size_t k) { return diff(n.args[k], i); };
    switch (n.op) {
    case Op::Const: return num(0.0);
    case Op::Var: return num(1.0);
    case Op::Add: return add(D(0), D(1));
    case Op::Sub: return sub(D(0), D(1));
    case Op::Mul: return add(mul(D(0), A(1)), mul(A(0), D(1)));
    case Op::Div:
        return divide(sub(mul(D(0), A(1)), mul(A(0), D(1))), mul(A(1), A(1)));
    case Op::Pow: {
        NodePtr r = num(0.0);
        if (depends(*A(0), i))
            r = mul(mul(A(1), make(Op::Pow, {A(0), sub(A(1), num(1.0))})), D(0));
        if (depends(*A(1), i))
            r = add(r, mul(mul(p, unary(Op::Log, A(0))), D(1)));
        return r;
    }
    case Op::Neg: return neg(D(0));
    case Op::Sin: return mul(unary(Op::Cos, A(0)), D(0));
    case Op::Cos: return neg(mul(unary(Op::Sin, A(0)), D(0)));
    case Op::Tan: {
        auto c = unary(Op::Cos, A(0));
        return divide(D(0), mul(c, c));
    }
    case Op::Exp: return mul(p, D(0));
    case Op::Log: return divide(D(0), A(0));
    case Op::Sqrt: return divide(D(0), mul(num(2.0), p));
    case Op::Abs: return branch(A(0), D(0), neg(D(0)));
    case Op::Tanh: return mul(sub(num(1.0), mul(p, p)), D(0));
    case Op::Min: return branch(sub(A(1), A(0)), D(0), D(1));
    case Op::Max: return branch(sub(A(0), A(1)), D(0), D(1));
    case Op::If: return branch(A(0), D(1), D(2));
    }
    return num(0.0);
}

const std::map<std::string, Op>& unary_ops()
{
    static const std::map<std::string, Op> m = {
        {"neg", Op::Neg}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan}, {"exp", Op::Exp},
        {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"tanh", Op::Tanh},
    };
    return m;
}

std::string escape(const std::string& key)
{
    std::string out;
    for (char ch : key) {
        if (ch == '~')
            out += "~0";
        else if (ch == '/')
            out += "~1";
        else
            out += ch;
    }
    return out;
}

struct Parser {
    const std::vector<std::string>& vars;

    NodePtr parse(const nlohmann::json& j, const std::string& ptr) const
    {
        if (j.is_number()) {
            const double v = j.get<double>();
            if (!std::isfinite(v))
                throw ExprError(ptr, "non-finite constant");
            return num(v);
        }
        if (j.is_string())
            return symbol(j.get<std::string>(), ptr);
        if (!j.is_object() || j.size() != 1)
            throw ExprError(ptr, "expected a number, a name or an object with one operator key");
        const auto it = j.begin();
        const std::string key = it.key();
        const nlohmann::json& body = it.value();
        const std::string at = ptr + "/" + escape(key);
        std::vector<NodePtr> args;
        if (body.is_array()) {
            for (std::size_t k = 0; k < body.size(); ++k)
                args.push_back(parse(body[k], at + "/" + std::to_string(k)));
        } else {
            args.push_back(parse(body, at));
        }
        return apply(key, std::move(args), at);
    }

    NodePtr symbol(const std::string& s, const std::string& ptr) const
    {
        for (std::size_t k = 0; k < vars.size(); ++k)
            if (vars[k] == s)
                return var(int(k));
        if (s == "pi")
            return num(std::numbers::pi);
        if (s == "e")
            return num(std::numbers::e);
        std::string known;
        for (const auto& v : vars)
            known += (known.empty() ? "" : ", ") + v;
        throw ExprError(ptr, "unknown variable '" + s + "' (variables: " + (known.empty() ? "none" : known) + ")");
    }

    static void arity(const std::vector<NodePtr>& a, std::size_t lo, std::size_t hi, const std::string& op,
                      const std::string& ptr)
    {
        if (a.size() < lo || a.size() > hi) {
            std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
            if (hi == std::size_t(-1))
                want = "at least " + std::to_string(lo);
            throw ExprError(ptr, "'" + op + "' takes " + want + " arguments, got " + std::to_string(a.size()));
        }
    }

    static NodePtr fold(Op op, std::vector<NodePtr> a)
    {
        NodePtr r = a[0];
        for (std::size_t k = 1; k < a.size(); ++k)
            r = make(op, {r, a[k]});
        return r;
    }

    static NodePtr apply(const std::string& op, std::vector<NodePtr> a, const std::string& ptr)
    {
        constexpr auto many = std::size_t(-1);
        if (op == "+") {
            arity(a, 1, many, op, ptr);
            return fold(Op::Add, std::move(a));
        }
        if (op == "*") {
            arity(a, 1, many, op, ptr);
            return fold(Op::Mul, std::move(a));
        }
        if (op == "min" || op == "max") {
            arity(a, 1, many, op, ptr);
            return fold(op == "min" ? Op::Min : Op::Max, std::move(a));
        }
        if (op == "-") {
            arity(a, 1, 2, op, ptr);
            return a.size() == 1 ? make(Op::Neg, std::move(a)) : make(Op::Sub, std::move(a));
        }
        if (op == "/") {
            arity(a, 2, 2, op, ptr);
            return make(Op::Div, std::move(a));
        }
        if (op == "pow") {
            arity(a, 2, 2, op, ptr);
            return make(Op::Pow, std::move(a));
        }
        if (op == "if") {
            arity(a, 3, 3, op, ptr);
            return make(Op::If, std::move(a));
        }
        if (auto it = unary_ops().find(op); it != unary_ops().end()) {
            arity(a, 1, 1, op, ptr);
            return make(it->second, std::move(a));
        }
        if (op == "gauss") {
            arity(a, 3, 3, op, ptr);
            auto u = divide(sub(a[0], a[1]), a[2]);
            return unary(Op::Exp, neg(mul(u, u)));
        }
        if (op == "smoothstep") {
            arity(a, 1, 3, op, ptr);
            if (a.size() == 2)
                throw ExprError(ptr, "'smoothstep' takes x or [x, a, b]");
            auto u = a.size() == 1 ? a[0] : divide(sub(a[0], a[1]), sub(a[2], a[1]));
            u = make(Op::Min, {make(Op::Max, {u, num(0.0)}), num(1.0)});
            return mul(mul(u, u), sub(num(3.0), mul(num(2.0), u)));
        }
        if (op == "bump") {
            arity(a, 3, 3, op, ptr);
            auto u = divide(sub(sub(mul(num(2.0), a[0]), a[1]), a[2]), sub(a[2], a[1]));
            auto q = sub(num(1.0), mul(u, u));
            return make(Op::If, {q, unary(Op::Exp, sub(num(1.0), divide(num(1.0), q))), num(0.0)});
        }
        throw ExprError(ptr, "unknown operator '" + op + "'");
    }
};

const char* name(Op op)
{
    switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "pow";
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Tanh: return "tanh";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::If: return "if";
    default: return "?";
    }
}

void print(std::ostream& os, const Node& n, const std::vector<std::string>& vars)
{
    if (n.op == Op::Const) {
        os << n.value;
        return;
    }
    if (n.op == Op::Var) {
        os << vars[std::size_t(n.var)];
        return;
    }
    os << '(' << name(n.op);
    for (const auto& c : n.args) {
        os << ' ';
        print(os, *c, vars);
    }
    os << ')';
}

}  // namespace

Expr Expr::parse(const nlohmann::json& j, std::vector<std::string> vars, const std::string& pointer)
{
    Expr e;
    e.root_ = Parser{vars}.parse(j, pointer);
    e.vars_ = std::move(vars);
    return e;
}

Expr Expr::constant(double c, std::vector<std::string> vars)
{
    Expr e;
    e.root_ = num(c);
    e.vars_ = std::move(vars);
    return e;
}

double Expr::operator()(std::span<const double> x) const
{
    if (!root_)
        throw ArgumentError("Expr: empty expression");
    if (x.size() != vars_.size())
        throw ArgumentError("Expr: expected " + std::to_string(vars_.size()) + " arguments, got " +
                            std::to_string(x.size()));
    return eval(*root_, x);
}

Expr Expr::derivative(int i) const
{
    if (i < 0 || std::size_t(i) >= vars_.size())
        throw ArgumentError("Expr::derivative: variable index out of range");
    Expr e;
    e.root_ = diff(root_, i);
    e.vars_ = vars_;
    return e;
}

Expr Expr::derivative(const std::string& v) const
{
    for (std::size_t k = 0; k < vars_.size(); ++k)
        if (vars_[k] == v)
            return derivative(int(k));
    throw ArgumentError("Expr::derivative: unknown variable '" + v + "'");
}

bool Expr::depends_on(int i) const { return root_ && depends(*root_, i); }

std::string Expr::str() const
{
    if (!root_)
        return "";
    std::ostringstream os;
    os.precision(17);
    print(os, *root_, vars_);
    return os.str();
}

}  // namespace leglab::expr
