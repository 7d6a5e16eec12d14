// SPDX-License-Identifier: Apache-2.0
#include "codesign/objective.hpp"

#include <algorithm>
#include <cmath>

namespace codesign {

Verdict validate_objective(const ObjectiveSpec& s) {
    if (!(s.beta >= 0.0)) return Verdict::fail("objective.beta must be >= 0");
    if (!(s.penalty_base > 1.0)) return Verdict::fail("objective.penalty_base must be > 1");
    if (!(s.res_ub.dsp > 0.0) || !(s.res_ub.bram_kbit > 0.0) || !(s.res_ub.lut > 0.0))
        return Verdict::fail("objective.res_ub entries must be > 0");
    if (!(s.latency_target_ms > 0.0)) return Verdict::fail("objective.latency_target_ms must be > 0");
    if (!(s.penalty_sharpness > 0.0)) return Verdict::fail("objective.penalty_sharpness must be > 0");
    return Verdict::ok();
}

ObjectiveSpec objective_for(const PlatformModel& p) {
    ObjectiveSpec s;
    s.res_ub = {static_cast<double>(p.dsp_budget), static_cast<double>(p.bram_budget_kbit), static_cast<double>(p.lut_budget)};
    return s;
}

double perf_loss_ms(const PerfReport& perf, PerfMode mode, const PlatformModel& platform) {
    if (mode == PerfMode::LatencySum) return perf.latency_ms;
    std::int64_t slowest = 0;
    for (auto c : perf.per_op_cycles) slowest = std::max(slowest, c);
    return static_cast<double>(slowest) / (platform.clock_mhz * 1e3);
}

double resource_overshoot(const Resources& used, const Resources& ub) {
    return std::max(0.0, (used.dsp - ub.dsp) / ub.dsp) + std::max(0.0, (used.bram_kbit - ub.bram_kbit) / ub.bram_kbit) +
           std::max(0.0, (used.lut - ub.lut) / ub.lut);
}

double discrete_penalty(const ObjectiveSpec& spec, const Resources& used) {
    const double over = resource_overshoot(used, spec.res_ub);
    if (over == 0.0) return spec.beta;
    return spec.beta * std::pow(spec.penalty_base, over);
}

bool within_budget(const Resources& used, const Resources& ub) {
    return used.dsp <= ub.dsp && used.bram_kbit <= ub.bram_kbit && used.lut <= ub.lut;
}

bool is_feasible(const ObjectiveSpec& spec, const PerfReport& perf) {
    return within_budget(perf.resources, spec.res_ub) && perf.latency_ms <= spec.latency_target_ms;
}

ObjectiveTerms evaluate_objective(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform,
                                  const ObjectiveSpec& spec, const AccuracyEvaluator& evaluator, std::uint64_t eval_seed) {
    ObjectiveTerms t;
    t.perf = evaluate(point, space, platform);
    const Assessment a = evaluator.assess(space, point, eval_seed);
    t.acc_loss = a.acc_loss;
    t.accuracy = a.accuracy;
    t.perf_loss = perf_loss_ms(t.perf, spec.perf_mode, platform);
    t.penalty = discrete_penalty(spec, t.perf.resources);
    t.total = t.acc_loss * t.perf_loss + t.penalty;
    t.feasible = is_feasible(spec, t.perf);
    return t;
}

}  // namespace codesign
