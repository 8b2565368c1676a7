#pragma once

#include "leglab/core.hpp"

#include <json.hpp>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace leglab::expr {

// Thrown with a JSON pointer to the offending node.
struct ExprError : ArgumentError {
    ExprError(const std::string& pointer_, const std::string& what)
        : ArgumentError(pointer_ + ": " + what), pointer(pointer_) {}
    std::string pointer;
};

enum class Op {
    Const, Var,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh,
    Min, Max,
    If,  // [cond, then, else]: then when cond > 0, only the taken branch is evaluated
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int var = -1;
    std::vector<NodePtr> args;
};

// A real function of named variables. Grammar:
//   number | "pi" | "e" | variable name | {"op": arg} | {"op": [args...]}
// with op one of + - * / pow neg sin cos tan exp log sqrt abs tanh min max bump
// smoothstep gauss if. "+" "*" "min" "max" take any number of arguments, "-" one or two.
// The piecewise helpers are rewritten into the core ops when parsed:
//   bump [x, a, b]        exp(1 - 1 / (1 - u^2)), u = (2x - a - b) / (b - a), zero off (a, b)
//   smoothstep x | [x, a, b]   3u^2 - 2u^3, u = (x - a) / (b - a) clamped to [0, 1]
//   gauss [x, c, w]       exp(-((x - c) / w)^2)
class Expr {
public:
    Expr() = default;

    static Expr parse(const nlohmann::json& j, std::vector<std::string> vars, const std::string& pointer = "");
    static Expr constant(double c, std::vector<std::string> vars = {});

    double operator()(std::span<const double> x) const;
    double operator()(std::initializer_list<double> x) const { return (*this)(std::span(x.begin(), x.size())); }

    // d/d(vars[i]); min, max, abs and if use the active branch, bump and smoothstep are exact.
    Expr derivative(int i) const;
    Expr derivative(const std::string& name) const;

    bool depends_on(int i) const;
    const std::vector<std::string>& vars() const { return vars_; }
    bool empty() const { return !root_; }
    std::string str() const;

private:
    NodePtr root_;
    std::vector<std::string> vars_;
};

}  // namespace leglab::expr
