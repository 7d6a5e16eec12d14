// SPDX-License-Identifier: Apache-2.0
//
// Differentiable co-search. Op choice (theta), quantization (phi) and the
// parallel factor (pf_cont) are relaxed and descended jointly on
//   L = Acc_loss * Perf_loss + beta * C^(sum_r softplus(overshoot_r)).
// The macro skeleton (depth, channels, pools) stays fixed.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codesign/accuracy.hpp"
#include "codesign/autodiff.hpp"
#include "codesign/gumbel.hpp"
#include "codesign/objective.hpp"
#include "codesign/serialize.hpp"

namespace codesign {

struct RelaxedState {
    int n = 0;  // blocks
    int m = 0;  // candidates per block
    int q = 0;  // global quantization choices
    std::vector<double> theta;    // n x m
    std::vector<double> phi;      // n x m x q
    std::vector<double> pf_cont;  // n x m

    std::size_t ti(int i, int k) const { return static_cast<std::size_t>(i * m + k); }
    std::size_t pi(int i, int k, int b) const { return static_cast<std::size_t>((i * m + k) * q + b); }

    friend bool operator==(const RelaxedState&, const RelaxedState&) = default;
};

struct EddSkeleton {
    std::string bundle_id;
    std::vector<int> channels;  // one per block
    std::vector<int> pools;
};

struct EddConfig {
    int epochs = 500;
    double lr_theta = 5.0;
    double lr_phi = 5.0;
    double lr_pf = 0.5;
    std::optional<double> grad_clip = 10.0;
    GumbelConfig gumbel;
    EddSkeleton skeleton;
    std::uint64_t seed = 0;
};

Verdict validate_edd(const EddConfig& cfg, const SearchSpace& space);

// Zero logits; pf at the middle of each op's range.
RelaxedState initial_state(const SearchSpace& space, const EddSkeleton& skeleton);
// Keeps every pf_cont inside its op's [pf_min, pf_max].
void clamp_pf(RelaxedState& state, const SearchSpace& space, const EddSkeleton& skeleton);
Verdict validate_state(const RelaxedState& state, const SearchSpace& space);

// Gumbel noise for one forward pass: per block over ops, then per (block,op)
// over that op's allowed widths. Zero-MAC ops draw no width noise.
struct EddNoise {
    std::vector<std::vector<double>> op;                    // [i][m]
    std::vector<std::vector<std::vector<double>>> quant;    // [i][m][allowed]
};

EddNoise draw_noise(const SearchSpace& space, const EddSkeleton& skeleton, Rng& rng);

struct RelaxedLoss {
    ad::Var loss;
    ad::Var acc_loss;
    ad::Var perf_loss;
    ad::Var penalty;
    SmoothResources<ad::Var> resources;
};

// Registers the state as tape variables named theta.i.m, phi.i.m.b, pf.i.m.
RelaxedLoss build_relaxed_loss(const RelaxedState& state, const SearchSpace& space, const PlatformModel& platform,
                               const SurrogateParams& surrogate, const ObjectiveSpec& objective,
                               const EddSkeleton& skeleton, const EddNoise& noise, double tau, ad::Tape& tape);

DesignPoint derive_discrete(const RelaxedState& state, const SearchSpace& space, const EddSkeleton& skeleton);

struct EddResult {
    DesignPoint best;
    ObjectiveTerms best_terms;
    RelaxedState state;
    SearchTrace trace;
    bool aborted = false;  // a non-finite loss stopped the descent early
    int epochs_run = 0;
};

EddResult edd_search(const SearchSpace& space, const PlatformModel& platform, const SurrogateEvaluator& surrogate,
                     const ObjectiveSpec& objective, const EddConfig& cfg);

Json to_json(const RelaxedState& state);
RelaxedState relaxed_state_from_json(const nlohmann::json& j);

}  // namespace codesign
