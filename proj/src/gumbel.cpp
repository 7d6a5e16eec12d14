// SPDX-License-Identifier: Apache-2.0
#include "codesign/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace codesign {

double GumbelConfig::tau_at(int epoch) const {
    return std::max(tau_end, tau_start * std::pow(decay, static_cast<double>(epoch)));
}

Verdict validate_gumbel(const GumbelConfig& cfg) {
    if (!(cfg.tau_start > 0.0) || !(cfg.tau_end > 0.0)) return Verdict::fail("gumbel: temperatures must be > 0");
    if (cfg.tau_end > cfg.tau_start) return Verdict::fail("gumbel: tau_end must be <= tau_start");
    if (!(cfg.decay > 0.0) || cfg.decay > 1.0) return Verdict::fail("gumbel: decay must be in (0, 1]");
    return Verdict::ok();
}

std::vector<double> gumbel_noise(Rng& rng, std::size_t m) {
    std::vector<double> g(m);
    for (double& x : g) x = -std::log(-std::log(uniform_open01(rng)));
    return g;
}

std::vector<ad::Var> gumbel_softmax(ad::Tape& tape, std::span<const ad::Var> logits, std::span<const double> noise,
                                    double tau) {
    if (logits.empty()) throw std::invalid_argument("gumbel_softmax: no logits");
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
    if (noise.size() != logits.size()) throw std::invalid_argument("gumbel_softmax: noise length mismatch");
    std::vector<ad::Var> z;
    z.reserve(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) z.push_back((logits[k] + noise[k]) * (1.0 / tau));
    return tape.softmax(z);
}

std::vector<ad::Var> gumbel_softmax(ad::Tape& tape, std::span<const ad::Var> logits, double tau, Rng& rng) {
    const auto g = gumbel_noise(rng, logits.size());
    return gumbel_softmax(tape, logits, g, tau);
}

std::vector<double> gumbel_softmax(std::span<const double> logits, double tau, Rng& rng) {
    if (logits.empty()) throw std::invalid_argument("gumbel_softmax: no logits");
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
    const auto g = gumbel_noise(rng, logits.size());
    std::vector<double> y(logits.size());
    double hi = -INFINITY;
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = (logits[k] + g[k]) / tau;
        hi = std::max(hi, y[k]);
    }
    double total = 0.0;
    for (double& v : y) total += (v = std::exp(v - hi));
    for (double& v : y) v /= total;
    return y;
}

}  // namespace codesign
