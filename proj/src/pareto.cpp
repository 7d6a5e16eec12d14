// SPDX-License-Identifier: Apache-2.0
#include "codesign/pareto.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "codesign/parallel.hpp"
#include "codesign/rng.hpp"

namespace codesign {

bool dominates(const CostValue& p, const CostValue& q) {
    return p.cost <= q.cost && p.value >= q.value && (p.cost < q.cost || p.value > q.value);
}

std::vector<std::size_t> pareto_front(std::span<const CostValue> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // cost ascending, then value descending, then input order
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
        return points[a].value > points[b].value;
    });
    std::vector<std::size_t> front;
    for (std::size_t idx : order) {
        // Sweep: a point survives iff its value beats every cheaper survivor.
        if (front.empty() || points[idx].value > points[front.back()].value) front.push_back(idx);
    }
    return front;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

DesignPoint bundle_trial(const SearchSpace& space, std::size_t bundle_index, std::uint64_t seed) {
    const Bundle& b = space.bundles[bundle_index];
    Rng rng{seed};
    DesignPoint p;
    p.bundle_id = b.id;
    p.replications = space.num_blocks;
    for (int i = 0; i < space.num_blocks; ++i) {
        const auto& cc = space.channel_choices[static_cast<std::size_t>(i)];
        const auto m = uniform_index(rng, b.ops.size());
        const OpCandidate& op = b.ops[m];
        p.op_choice.push_back(static_cast<int>(m));
        p.channels.push_back(cc[cc.size() / 2]);
        p.quant_bits.push_back(op.allowed_quant_bits[uniform_index(rng, op.allowed_quant_bits.size())]);
        p.pf.push_back(uniform_int(rng, op.pf_min, op.pf_max));
    }
    return p;
}

struct TrialScore {
    double resource = 0.0;
    double accuracy = 0.0;
};

}  // namespace

BundleSelection score_bundles(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                              int trials_per_bundle, std::uint64_t seed, const ResourceWeights& weights) {
    if (trials_per_bundle < 1) throw std::invalid_argument("score_bundles: trials_per_bundle must be >= 1");
    const auto trials = static_cast<std::size_t>(trials_per_bundle);
    const std::size_t jobs = space.bundles.size() * trials;
    const auto results = parallel_map<TrialScore>(jobs, [&](std::size_t job) {
        const std::size_t b = job / trials;
        const DesignPoint p = bundle_trial(space, b, derive_seed(seed, "bundle_trial", job));
        const PerfReport perf = evaluate(p, space, platform);
        return TrialScore{resource_scalar(perf.resources, platform, weights),
                          evaluator.accuracy(space, p, derive_seed(seed, "bundle_eval", job))};
    });

    BundleSelection sel;
    std::vector<CostValue> cv;
    for (std::size_t b = 0; b < space.bundles.size(); ++b) {
        std::vector<double> res;
        std::vector<double> acc;
        for (std::size_t t = 0; t < trials; ++t) {
            res.push_back(results[b * trials + t].resource);
            acc.push_back(results[b * trials + t].accuracy);
        }
        BundleScore s{space.bundles[b].id, median(res), median(acc), trials_per_bundle, false};
        cv.push_back({s.resource_scalar, s.accuracy});
        sel.scores.push_back(std::move(s));
    }
    sel.front = pareto_front(cv);
    for (std::size_t i : sel.front) sel.scores[i].on_front = true;
    return sel;
}

void write_bundle_scores_csv(std::ostream& os, const BundleSelection& selection) {
    os.precision(17);
    os << "bundle_id,resource_scalar,accuracy,on_front\n";
    for (const auto& s : selection.scores)
        os << s.bundle_id << ',' << s.resource_scalar << ',' << s.accuracy << ',' << (s.on_front ? 1 : 0) << '\n';
}

}  // namespace codesign
