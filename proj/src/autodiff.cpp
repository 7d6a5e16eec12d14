// SPDX-License-Identifier: Apache-2.0
#include "codesign/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace codesign {

double logsumexp(double a, double b) {
    const double hi = std::max(a, b);
    if (std::isinf(hi) && hi < 0) return hi;
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace codesign

namespace codesign::ad {

const char* to_string(OpCode op) {
    switch (op) {
    case OpCode::Const: return "const";
    case OpCode::Var: return "var";
    case OpCode::Add: return "add";
    case OpCode::Mul: return "mul";
    case OpCode::Div: return "div";
    case OpCode::Neg: return "neg";
    case OpCode::Exp: return "exp";
    case OpCode::Log: return "log";
    case OpCode::Pow: return "pow";
    case OpCode::LogSumExpPair: return "logsumexp";
    case OpCode::SoftmaxGroup: return "softmax";
    }
    return "?";
}

double Var::value() const { return tape->value(*this); }

Var Tape::push(OpCode op, std::int32_t a, std::int32_t b, double value, std::int32_t aux) {
    nodes_.push_back(Node{op, a, b, aux, value});
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check_owned(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument("variable does not belong to this tape");
}

void Tape::clear() {
    nodes_.clear();
    group_inputs_.clear();
    vars_.clear();
}

Var Tape::constant(double v) { return push(OpCode::Const, -1, -1, v); }

Var Tape::variable(double v, std::string external_id) {
    Var out = push(OpCode::Var, -1, -1, v);
    vars_.emplace_back(std::move(external_id), out.id);
    return out;
}

Var Tape::add(Var a, Var b) {
    check_owned(a);
    check_owned(b);
    return push(OpCode::Add, a.id, b.id, value(a) + value(b));
}

Var Tape::mul(Var a, Var b) {
    check_owned(a);
    check_owned(b);
    return push(OpCode::Mul, a.id, b.id, value(a) * value(b));
}

Var Tape::div(Var a, Var b) {
    check_owned(a);
    check_owned(b);
    const double d = value(b);
    const auto id = static_cast<std::int32_t>(nodes_.size());
    if (d == 0.0) throw DomainError(id, "div node " + std::to_string(id) + ": division by zero (divisor node " + std::to_string(b.id) + ")");
    return push(OpCode::Div, a.id, b.id, value(a) / d);
}

Var Tape::neg(Var a) {
    check_owned(a);
    return push(OpCode::Neg, a.id, -1, -value(a));
}

Var Tape::exp(Var a) {
    check_owned(a);
    return push(OpCode::Exp, a.id, -1, std::exp(value(a)));
}

Var Tape::log(Var a) {
    check_owned(a);
    const double x = value(a);
    const auto id = static_cast<std::int32_t>(nodes_.size());
    if (!(x > 0.0)) throw DomainError(id, "log node " + std::to_string(id) + ": non-positive argument " + std::to_string(x));
    return push(OpCode::Log, a.id, -1, std::log(x));
}

Var Tape::pow(Var base, Var exponent) {
    check_owned(base);
    check_owned(exponent);
    const double x = value(base);
    const double y = value(exponent);
    const bool integral_const_exponent = nodes_[static_cast<std::size_t>(exponent.id)].op == OpCode::Const && std::floor(y) == y;
    const auto id = static_cast<std::int32_t>(nodes_.size());
    if (!integral_const_exponent && !(x > 0.0))
        throw DomainError(id, "pow node " + std::to_string(id) + ": non-positive base " + std::to_string(x));
    if (integral_const_exponent && x == 0.0 && y < 0.0)
        throw DomainError(id, "pow node " + std::to_string(id) + ": zero base with negative exponent");
    return push(OpCode::Pow, base.id, exponent.id, std::pow(x, y));
}

Var Tape::logsumexp(Var a, Var b) {
    check_owned(a);
    check_owned(b);
    return push(OpCode::LogSumExpPair, a.id, b.id, codesign::logsumexp(value(a), value(b)));
}

std::vector<Var> Tape::softmax(std::span<const Var> inputs) {
    if (inputs.empty()) throw std::invalid_argument("softmax of an empty group");
    const auto offset = static_cast<std::int32_t>(group_inputs_.size());
    const auto size = static_cast<std::int32_t>(inputs.size());
    double hi = -INFINITY;
    for (Var v : inputs) {
        check_owned(v);
        group_inputs_.push_back(v.id);
        hi = std::max(hi, value(v));
    }
    std::vector<double> e(inputs.size());
    double total = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        e[k] = std::exp(value(inputs[k]) - hi);
        total += e[k];
    }
    std::vector<Var> out;
    out.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k)
        out.push_back(push(OpCode::SoftmaxGroup, offset, size, e[k] / total, static_cast<std::int32_t>(k)));
    return out;
}

std::vector<double> Tape::adjoints(Var output) const {
    if (output.tape != this || output.id < 0 || static_cast<std::size_t>(output.id) >= nodes_.size())
        throw std::invalid_argument("output node is not on this tape");
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[static_cast<std::size_t>(output.id)] = 1.0;
    for (auto i = static_cast<std::ptrdiff_t>(output.id); i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        const double g = adj[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        const auto A = static_cast<std::size_t>(n.a);
        const auto B = static_cast<std::size_t>(n.b);
        switch (n.op) {
        case OpCode::Const:
        case OpCode::Var: break;
        case OpCode::Add:
            adj[A] += g;
            adj[B] += g;
            break;
        case OpCode::Mul:
            adj[A] += g * nodes_[B].value;
            adj[B] += g * nodes_[A].value;
            break;
        case OpCode::Div: {
            const double d = nodes_[B].value;
            adj[A] += g / d;
            adj[B] -= g * n.value / d;
            break;
        }
        case OpCode::Neg: adj[A] -= g; break;
        case OpCode::Exp: adj[A] += g * n.value; break;
        case OpCode::Log: adj[A] += g / nodes_[A].value; break;
        case OpCode::Pow: {
            const double x = nodes_[A].value;
            const double y = nodes_[B].value;
            adj[A] += g * y * std::pow(x, y - 1.0);
            if (x > 0.0) adj[B] += g * n.value * std::log(x);
            break;
        }
        case OpCode::LogSumExpPair:
            adj[A] += g * std::exp(nodes_[A].value - n.value);
            adj[B] += g * std::exp(nodes_[B].value - n.value);
            break;
        case OpCode::SoftmaxGroup: {
            // y_j = softmax_j(x); dy_j/dx_k = y_j (delta_jk - y_k)
            const std::size_t first = static_cast<std::size_t>(i) - static_cast<std::size_t>(n.aux);
            const auto offset = static_cast<std::size_t>(n.a);
            for (std::size_t k = 0; k < static_cast<std::size_t>(n.b); ++k) {
                const double yk = nodes_[first + k].value;
                const double d = (k == static_cast<std::size_t>(n.aux) ? n.value : 0.0) - n.value * yk;
                adj[static_cast<std::size_t>(group_inputs_[offset + k])] += g * d;
            }
            break;
        }
        }
    }
    return adj;
}

std::string Tape::dump() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        os << i << ' ' << to_string(n.op);
        if (n.op == OpCode::SoftmaxGroup) {
            os << " [";
            for (std::int32_t k = 0; k < n.b; ++k) os << (k ? "," : "") << group_inputs_[static_cast<std::size_t>(n.a + k)];
            os << "]#" << n.aux;
        } else {
            if (n.a >= 0) os << ' ' << n.a;
            if (n.b >= 0) os << ' ' << n.b;
        }
        os << " = " << n.value << '\n';
    }
    return os.str();
}

std::map<std::string, double> grad(const Tape& tape, Var output, const std::set<std::string>& wrt) {
    const std::vector<double> adj = tape.adjoints(output);
    std::map<std::string, double> out;
    for (const auto& name : wrt) out[name] = 0.0;
    for (const auto& [name, node] : tape.variables()) {
        if (auto it = out.find(name); it != out.end()) it->second += adj[static_cast<std::size_t>(node)];
    }
    return out;
}

std::map<std::string, double> sgd_step(const std::map<std::string, double>& params,
                                       const std::map<std::string, double>& grads, double lr,
                                       std::optional<double> clip) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be > 0");
    std::map<std::string, double> out = params;
    for (auto& [name, p] : out) {
        auto it = grads.find(name);
        if (it == grads.end()) continue;
        double g = it->second;
        if (!std::isfinite(g)) throw std::domain_error("sgd_step: non-finite gradient for '" + name + "'");
        if (clip) g = std::clamp(g, -*clip, *clip);
        p -= lr * g;
    }
    return out;
}

Var operator+(Var a, Var b) { return a.tape->add(a, b); }
Var operator-(Var a, Var b) { return a.tape->add(a, a.tape->neg(b)); }
Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape->div(a, b); }
Var operator-(Var a) { return a.tape->neg(a); }
Var operator+(Var a, double b) { return a + a.tape->constant(b); }
Var operator+(double a, Var b) { return b.tape->constant(a) + b; }
Var operator-(Var a, double b) { return a + a.tape->constant(-b); }
Var operator-(double a, Var b) { return b.tape->constant(a) - b; }
Var operator*(Var a, double b) { return a * a.tape->constant(b); }
Var operator*(double a, Var b) { return b.tape->constant(a) * b; }
Var operator/(Var a, double b) { return a / a.tape->constant(b); }
Var operator/(double a, Var b) { return b.tape->constant(a) / b; }
Var exp(Var a) { return a.tape->exp(a); }
Var log(Var a) { return a.tape->log(a); }
Var pow(double base, Var exponent) { return exponent.tape->pow(exponent.tape->constant(base), exponent); }
Var pow(Var base, double exponent) { return base.tape->pow(base, base.tape->constant(exponent)); }
Var logsumexp(Var a, Var b) { return a.tape->logsumexp(a, b); }
Var logsumexp(Var a, double b) { return a.tape->logsumexp(a, a.tape->constant(b)); }

}  // namespace codesign::ad
