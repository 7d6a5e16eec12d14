// SPDX-License-Identifier: Apache-2.0
//
// Gumbel-Softmax sampling: y = softmax((logits + g) / tau) with
// g = -log(-log u). Noise is drawn separately from its application so that a
// loss can be rebuilt with the same frozen noise (finite-difference checks).
#pragma once

#include <span>
#include <vector>

#include "codesign/autodiff.hpp"
#include "codesign/rng.hpp"
#include "codesign/space.hpp"

namespace codesign {

struct GumbelConfig {
    double tau_start = 5.0;
    double tau_end = 0.1;
    double decay = 0.98;  // per epoch, multiplicative

    // tau_start * decay^epoch, never below tau_end
    double tau_at(int epoch) const;
};

Verdict validate_gumbel(const GumbelConfig& cfg);

std::vector<double> gumbel_noise(Rng& rng, std::size_t m);

std::vector<ad::Var> gumbel_softmax(ad::Tape& tape, std::span<const ad::Var> logits, std::span<const double> noise,
                                    double tau);
std::vector<ad::Var> gumbel_softmax(ad::Tape& tape, std::span<const ad::Var> logits, double tau, Rng& rng);

// Plain-valued sampler.
std::vector<double> gumbel_softmax(std::span<const double> logits, double tau, Rng& rng);

}  // namespace codesign
