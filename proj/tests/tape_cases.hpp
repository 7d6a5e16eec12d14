// SPDX-License-Identifier: Apache-2.0
//
// Random expression programs over the tape's primitives. A program is
// generated once from a seed and then interpreted either on plain doubles
// (for finite differences) or on a tape (for reverse-mode gradients).
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "codesign/autodiff.hpp"
#include "codesign/rng.hpp"

namespace testing {

enum class Instr { Add, Sub, Mul, Div, Neg, Exp, Log, PowConst, ConstPow, PowVar, Lse, Softmax, Scale };

struct Step {
    Instr op;
    int a;
    int b;
    int c;
    double k;
};

struct TapeProgram {
    int inputs = 0;
    std::vector<double> x0;
    std::vector<Step> steps;
};

inline double run_program(const TapeProgram& p, const std::vector<double>& x);

// Every step keeps arguments in their domain: log and pow see 1 + v^2,
// divisors are 1 + v^2, exponents are damped. Products can still overflow, so
// programs whose value leaves [-1e6, 1e6] are redrawn.
inline TapeProgram random_program_once(std::uint64_t seed, std::uint64_t attempt, int nodes) {
    using namespace codesign;
    Rng rng = make_rng(seed, "tape_program", attempt);
    TapeProgram p;
    p.inputs = uniform_int(rng, 2, 5);
    for (int i = 0; i < p.inputs; ++i) p.x0.push_back(-1.5 + 3.0 * uniform01(rng));
    int count = p.inputs;
    while (count < nodes) {
        auto pick = [&] { return uniform_int(rng, std::max(0, count - 8), count - 1); };
        Step s{static_cast<Instr>(uniform_int(rng, 0, 12)), pick(), pick(), pick(), 0.2 + uniform01(rng)};
        p.steps.push_back(s);
        ++count;
    }
    return p;
}

inline TapeProgram random_program(std::uint64_t seed, int nodes) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        TapeProgram p = random_program_once(seed, attempt, nodes);
        const double v = run_program(p, p.x0);
        if (std::isfinite(v) && std::abs(v) <= 1e6) return p;
    }
}

inline double run_program(const TapeProgram& p, const std::vector<double>& x) {
    std::vector<double> v = x;
    for (const Step& s : p.steps) {
        const double a = v[static_cast<std::size_t>(s.a)];
        const double b = v[static_cast<std::size_t>(s.b)];
        const double c = v[static_cast<std::size_t>(s.c)];
        double r = 0.0;
        switch (s.op) {
        case Instr::Add: r = a + b; break;
        case Instr::Sub: r = a - b; break;
        case Instr::Mul: r = a * b * 0.5; break;
        case Instr::Div: r = a / (1.0 + b * b); break;
        case Instr::Neg: r = -a; break;
        case Instr::Exp: r = std::exp(0.3 * a); break;
        case Instr::Log: r = std::log(1.0 + a * a); break;
        case Instr::PowConst: r = std::pow(1.0 + a * a, s.k); break;
        case Instr::ConstPow: r = std::pow(1.0 + s.k, 0.3 * a); break;
        case Instr::PowVar: r = std::pow(1.0 + a * a, 0.2 * std::tanh(b) + 0.3); break;
        case Instr::Lse: r = codesign::logsumexp(a, b); break;
        case Instr::Softmax: {
            const double m = std::max({a, b, c});
            r = std::exp(a - m) / (std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
            break;
        }
        case Instr::Scale: r = s.k * a; break;
        }
        v.push_back(r);
    }
    return v.back();
}

// tanh on the tape, from exp: (1 - e^{-2x}) / (1 + e^{-2x}).
inline codesign::ad::Var tape_tanh(codesign::ad::Var x) {
    const codesign::ad::Var e = codesign::ad::exp(x * -2.0);
    return (1.0 - e) / (1.0 + e);
}

inline codesign::ad::Var run_program(const TapeProgram& p, codesign::ad::Tape& tape, std::vector<codesign::ad::Var>& vars) {
    using namespace codesign::ad;
    std::vector<Var> v;
    vars.clear();
    for (int i = 0; i < p.inputs; ++i) {
        vars.push_back(tape.variable(p.x0[static_cast<std::size_t>(i)], "x" + std::to_string(i)));
        v.push_back(vars.back());
    }
    for (const Step& s : p.steps) {
        const Var a = v[static_cast<std::size_t>(s.a)];
        const Var b = v[static_cast<std::size_t>(s.b)];
        const Var c = v[static_cast<std::size_t>(s.c)];
        Var r;
        switch (s.op) {
        case Instr::Add: r = a + b; break;
        case Instr::Sub: r = a - b; break;
        case Instr::Mul: r = a * b * 0.5; break;
        case Instr::Div: r = a / (1.0 + b * b); break;
        case Instr::Neg: r = -a; break;
        case Instr::Exp: r = exp(a * 0.3); break;
        case Instr::Log: r = log(1.0 + a * a); break;
        case Instr::PowConst: r = pow(1.0 + a * a, s.k); break;
        case Instr::ConstPow: r = pow(1.0 + s.k, a * 0.3); break;
        case Instr::PowVar: r = tape.pow(1.0 + a * a, tape_tanh(b) * 0.2 + 0.3); break;
        case Instr::Lse: r = logsumexp(a, b); break;
        case Instr::Softmax: {
            const std::vector<Var> in{a, b, c};
            r = tape.softmax(in)[0];
            break;
        }
        case Instr::Scale: r = a * s.k; break;
        }
        v.push_back(r);
    }
    return v.back();
}

}  // namespace testing
