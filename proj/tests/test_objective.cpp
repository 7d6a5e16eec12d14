// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "codesign/objective.hpp"
#include "codesign/rng.hpp"

using namespace codesign;
using namespace testing;

TEST_CASE("penalty is exactly beta at or under the budget") {
    ObjectiveSpec s;
    s.beta = 0.7;
    s.res_ub = {100, 200, 300};
    CHECK(discrete_penalty(s, {100, 200, 300}) == 0.7);
    CHECK(discrete_penalty(s, {0, 0, 0}) == 0.7);
    CHECK(discrete_penalty(s, {50, 199.5, 1}) == 0.7);
}

TEST_CASE("penalty grows exponentially in the summed overshoot") {
    ObjectiveSpec s;
    s.beta = 2.0;
    s.penalty_base = 3.0;
    s.res_ub = {100, 200, 300};
    CHECK(resource_overshoot({150, 200, 300}, s.res_ub) == doctest::Approx(0.5));
    CHECK(resource_overshoot({150, 300, 0}, s.res_ub) == doctest::Approx(1.0));
    CHECK(discrete_penalty(s, {150, 300, 0}) == doctest::Approx(6.0));
    double prev = discrete_penalty(s, {100, 200, 300});
    for (double d = 101; d < 400; d += 10) {
        const double p = discrete_penalty(s, {d, 200, 300});
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("total is accuracy loss times perf loss plus penalty") {
    const SearchSpace s = small_space();
    PlatformModel plat = roomy_platform();
    plat.dsp_budget = 40;  // some samples go over
    ObjectiveSpec spec = objective_for(plat);
    const SurrogateEvaluator ev{SurrogateParams{}};
    int over = 0;
    for (std::uint64_t k = 0; k < 300; ++k) {
        const DesignPoint p = sample_uniform(s, derive_seed(12, "obj", k));
        spec.beta = 0.0;
        const ObjectiveTerms t0 = evaluate_objective(p, s, plat, spec, ev, 0);
        CHECK(t0.total == t0.acc_loss * t0.perf_loss);
        CHECK(t0.perf_loss == t0.perf.latency_ms);
        spec.beta = 1.5;
        const ObjectiveTerms t1 = evaluate_objective(p, s, plat, spec, ev, 0);
        CHECK(t1.total == doctest::Approx(t1.acc_loss * t1.perf_loss + t1.penalty).epsilon(1e-15));
        CHECK(t1.penalty >= 1.5);
        CHECK(t1.feasible == (within_budget(t1.perf.resources, spec.res_ub) && t1.perf.latency_ms <= spec.latency_target_ms));
        over += !within_budget(t1.perf.resources, spec.res_ub);
    }
    CHECK(over > 0);
}

TEST_CASE("throughput mode uses the slowest stage") {
    PerfReport r;
    r.per_op_cycles = {100, 700, 300};
    r.latency_ms = 123.0;
    PlatformModel plat;
    plat.clock_mhz = 100.0;
    CHECK(perf_loss_ms(r, PerfMode::ThroughputMax, plat) == doctest::Approx(0.007));
    CHECK(perf_loss_ms(r, PerfMode::LatencySum, plat) == 123.0);
}

TEST_CASE("objective validation") {
    ObjectiveSpec s = objective_for(roomy_platform());
    CHECK(validate_objective(s).valid);
    s.beta = -1.0;
    CHECK_FALSE(validate_objective(s).valid);
    s = objective_for(roomy_platform());
    s.penalty_base = 1.0;
    CHECK_FALSE(validate_objective(s).valid);
    s = objective_for(roomy_platform());
    s.res_ub.lut = 0.0;
    CHECK_FALSE(validate_objective(s).valid);
    s = objective_for(roomy_platform());
    s.latency_target_ms = 0.0;
    CHECK_FALSE(validate_objective(s).valid);
}
