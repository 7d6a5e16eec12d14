// SPDX-License-Identifier: Apache-2.0
//
// The joint objective  L = Acc_loss * Perf_loss + beta * C^(RES - RES_ub)
// evaluated on a discrete design point, together with the hard feasibility
// rule (resources within budget, latency within target).
#pragma once

#include <cstdint>
#include <numbers>

#include "codesign/accuracy.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/space.hpp"

namespace codesign {

enum class PerfMode { LatencySum, ThroughputMax };

struct ObjectiveSpec {
    double beta = 1.0;
    double penalty_base = std::numbers::e;  // C
    Resources res_ub;                       // filled from the platform budgets when not configured
    double latency_target_ms = 1.0;
    PerfMode perf_mode = PerfMode::LatencySum;
    double penalty_sharpness = 50.0;  // softplus sharpness of the relaxed exponent
};

Verdict validate_objective(const ObjectiveSpec& spec);

ObjectiveSpec objective_for(const PlatformModel& platform);

// Perf_loss in milliseconds: end-to-end latency, or the slowest stage's time
// when optimizing throughput.
double perf_loss_ms(const PerfReport& perf, PerfMode mode, const PlatformModel& platform);

// Sum over resources of the fractional overshoot (r - ub) / ub, clamped at 0.
double resource_overshoot(const Resources& used, const Resources& ub);
// beta * C^overshoot; exactly beta when nothing is over budget.
double discrete_penalty(const ObjectiveSpec& spec, const Resources& used);

bool within_budget(const Resources& used, const Resources& ub);
bool is_feasible(const ObjectiveSpec& spec, const PerfReport& perf);

struct ObjectiveTerms {
    double acc_loss = 0.0;
    double accuracy = 0.0;
    double perf_loss = 0.0;
    double penalty = 0.0;
    double total = 0.0;
    bool feasible = false;
    PerfReport perf;
};

ObjectiveTerms evaluate_objective(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform,
                                  const ObjectiveSpec& spec, const AccuracyEvaluator& evaluator, std::uint64_t eval_seed);

}  // namespace codesign
