// SPDX-License-Identifier: Apache-2.0
//
// Batch design-point evaluation: threaded map against its serial twin.
#include <benchmark/benchmark.h>

#include "codesign/accuracy.hpp"
#include "codesign/objective.hpp"
#include "codesign/parallel.hpp"
#include "codesign/rng.hpp"

using namespace codesign;

namespace {

SearchSpace bench_space() {
    SearchSpace s;
    s.num_blocks = 6;
    s.min_replications = 2;
    s.quant_bits = {4, 8, 16};
    s.channel_choices.assign(6, {16, 32, 64});
    s.pool_positions = {0, 2, 4};
    s.input = {32, 32, 16};
    OpCandidate conv;
    conv.kind = OpKind::Conv1x1;
    conv.allowed_quant_bits = {4, 8, 16};
    conv.pf_max = 6;
    OpCandidate mb = conv;
    mb.kind = OpKind::MBConv;
    mb.kernel_size = 5;
    mb.expansion_ratio = 4.0;
    OpCandidate id = conv;
    id.kind = OpKind::Identity;
    s.bundles.push_back({"mix", {conv, mb, id}, true});
    return s;
}

struct Batch {
    SearchSpace space = bench_space();
    PlatformModel platform;
    ObjectiveSpec objective = objective_for(platform);
    SurrogateEvaluator evaluator{SurrogateParams{}};
    std::vector<DesignPoint> points;

    explicit Batch(std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) points.push_back(sample_uniform(space, derive_seed(1, "bench", k)));
    }
    double eval(std::size_t k) const {
        return evaluate_objective(points[k], space, platform, objective, evaluator, 0).total;
    }
};

void BM_BatchSerial(benchmark::State& state) {
    const Batch batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto out = parallel_map_serial<double>(batch.points.size(), [&](std::size_t k) { return batch.eval(k); });
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
    const Batch batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto out = parallel_map<double>(batch.points.size(), [&](std::size_t k) { return batch.eval(k); });
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = max_threads();
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_BatchParallel)->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
