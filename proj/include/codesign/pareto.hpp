// SPDX-License-Identifier: Apache-2.0
//
// Resource/accuracy Pareto selection of bundles.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "codesign/accuracy.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/space.hpp"

namespace codesign {

// Lower cost is better, higher value is better.
struct CostValue {
    double cost = 0.0;
    double value = 0.0;
};

bool dominates(const CostValue& p, const CostValue& q);

// Indices of the non-dominated points, sorted by cost ascending. Of several
// identical points only the first in input order survives.
std::vector<std::size_t> pareto_front(std::span<const CostValue> points);

struct BundleScore {
    std::string bundle_id;
    double resource_scalar = 0.0;
    double accuracy = 0.0;
    int points_evaluated = 0;
    bool on_front = false;
};

struct BundleSelection {
    std::vector<BundleScore> scores;  // in space order
    std::vector<std::size_t> front;   // indices into scores, by resource ascending
};

// Each trial replicates the bundle over all N slots with the middle channel
// choice, draws op/quant/pf per slot, and is scored by the evaluator and the
// perf model. Per-bundle scores are medians over trials.
BundleSelection score_bundles(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                              int trials_per_bundle, std::uint64_t seed, const ResourceWeights& weights = {});

double median(std::vector<double> values);

void write_bundle_scores_csv(std::ostream& os, const BundleSelection& selection);

}  // namespace codesign
