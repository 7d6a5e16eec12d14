// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation on a scalar tape.
//
// Values are computed eagerly when a node is recorded, so domain errors
// (log of a non-positive number, division by zero) surface at the call that
// builds the offending node. Inputs always precede outputs, which keeps the
// tape acyclic and lets the backward pass be a single reverse sweep.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace codesign::ad {

enum class OpCode : std::uint8_t { Const, Var, Add, Mul, Div, Neg, Exp, Log, Pow, LogSumExpPair, SoftmaxGroup };

const char* to_string(OpCode op);

class DomainError : public std::domain_error {
public:
    DomainError(std::int32_t node, const std::string& what) : std::domain_error(what), node_(node) {}
    std::int32_t node() const { return node_; }

private:
    std::int32_t node_;
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;

    double value() const;
};

class Tape {
public:
    Var constant(double v);
    Var variable(double v, std::string external_id);

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var pow(Var base, Var exponent);
    Var logsumexp(Var a, Var b);  // log(exp a + exp b), overflow-safe
    std::vector<Var> softmax(std::span<const Var> inputs);

    double value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
    std::size_t size() const { return nodes_.size(); }
    void clear();

    // d(output)/d(node) for every node on the tape.
    std::vector<double> adjoints(Var output) const;

    // external id -> node id, in registration order
    const std::vector<std::pair<std::string, std::int32_t>>& variables() const { return vars_; }

    // One node per line: id opcode inputs value. Debug aid, not a stable format.
    std::string dump() const;

private:
    struct Node {
        OpCode op;
        std::int32_t a = -1;
        std::int32_t b = -1;
        std::int32_t aux = 0;  // softmax: output slot within the group
        double value = 0.0;
    };

    Var push(OpCode op, std::int32_t a, std::int32_t b, double value, std::int32_t aux = 0);
    void check_owned(Var v) const;

    std::vector<Node> nodes_;
    std::vector<std::int32_t> group_inputs_;
    std::vector<std::pair<std::string, std::int32_t>> vars_;
};

// Gradient of `output` with respect to the registered variables named in
// `wrt`. Variables that do not reach the output get 0.
std::map<std::string, double> grad(const Tape& tape, Var output, const std::set<std::string>& wrt);

// p <- p - lr * clip(g), with element-wise clipping to [-clip, clip].
std::map<std::string, double> sgd_step(const std::map<std::string, double>& params,
                                       const std::map<std::string, double>& grads, double lr,
                                       std::optional<double> clip = std::nullopt);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
Var exp(Var a);
Var log(Var a);
Var pow(double base, Var exponent);
Var pow(Var base, double exponent);
Var logsumexp(Var a, Var b);
Var logsumexp(Var a, double b);

}  // namespace codesign::ad

namespace codesign {

// Scalar helpers that let one template serve both plain doubles and tape
// variables.
inline double constant_like(double, double value) { return value; }
inline ad::Var constant_like(const ad::Var& like, double value) { return like.tape->constant(value); }

double logsumexp(double a, double b);

// s * log(exp(a/s) + exp(b/s)); lies in [max(a,b), max(a,b) + s*ln2].
template <class S, class T>
auto smooth_max(const S& a, const T& b, double sharpness) {
    return logsumexp(a / sharpness, b / sharpness) * sharpness;
}

// log(1 + exp(k x)) / k; a smooth clamp of x at zero from below.
template <class S>
S softplus(const S& x, double sharpness) {
    return logsumexp(x * sharpness, 0.0) / sharpness;
}

}  // namespace codesign
