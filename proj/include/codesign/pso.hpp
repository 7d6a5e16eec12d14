// SPDX-License-Identifier: Apache-2.0
//
// Particle-swarm co-search. Each particle is a design point encoded as a real
// vector; particles built on the same bundle form a group whose best position
// pulls on its members alongside the personal and global bests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codesign/accuracy.hpp"
#include "codesign/objective.hpp"
#include "codesign/rng.hpp"
#include "codesign/serialize.hpp"

namespace codesign {

struct PsoConfig {
    int swarm_size = 16;
    int iters = 100;
    double inertia = 0.7;       // w at the first iteration
    std::optional<double> inertia_end;  // when set, w falls linearly to this by the last iteration
    double vmax_fraction = 1.0;  // velocity cap as a fraction of each dimension's range
    // A particle whose personal best has not improved for this many iterations
    // is re-seeded uniformly (the personal best itself is kept); 0 disables.
    int stagnation_reset = 5;
    double cognitive = 1.4;     // c1
    double social = 1.4;        // c2
    double group_social = 0.7;  // c3
    double fitness_lambda = 1.0;
    std::uint64_t seed = 0;
};

Verdict validate_pso(const PsoConfig& cfg);

// accuracy - lambda * latency hinge - lambda * summed resource overshoot
double pso_fitness(double accuracy, const PerfReport& perf, const ObjectiveSpec& objective, double lambda);

// Position layout: [replications, op x N, channel index x N, pool flag x P,
// quant index x N, pf x N] where P is the number of allowed pool positions.
struct PsoEncoding {
    std::vector<double> lo;
    std::vector<double> hi;
    std::size_t dims() const { return lo.size(); }
};

PsoEncoding pso_encoding(const SearchSpace& space);
// Clamp, round half up to the nearest choice index, then repair. Always valid.
DesignPoint pso_decode(const SearchSpace& space, const std::string& bundle_id, const std::vector<double>& position);
std::vector<double> pso_encode(const SearchSpace& space, const DesignPoint& point, Rng& filler);

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double best_fitness = 0.0;
    int group = 0;  // bundle index
    int stagnant = 0;  // iterations since the personal best last improved
};

struct PsoResult {
    DesignPoint best;
    double best_fitness = 0.0;
    ObjectiveTerms best_terms;
    std::vector<double> gbest_history;  // after initialization, then after each iteration
    std::vector<Particle> swarm;
    SearchTrace trace;
};

PsoResult pso_search(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                     const ObjectiveSpec& objective, const PsoConfig& cfg);

}  // namespace codesign
