// SPDX-License-Identifier: Apache-2.0
#include "codesign/pso.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "codesign/parallel.hpp"
#include "codesign/rng.hpp"

namespace codesign {

Verdict validate_pso(const PsoConfig& cfg) {
    if (cfg.swarm_size < 1) return Verdict::fail("pso.swarm_size must be >= 1");
    if (cfg.iters < 0) return Verdict::fail("pso.iters must be >= 0");
    for (double c : {cfg.inertia, cfg.cognitive, cfg.social, cfg.group_social})
        if (!(c >= 0.0) || !std::isfinite(c)) return Verdict::fail("pso coefficients w, c1, c2, c3 must be finite and >= 0");
    if (cfg.inertia_end && (!(*cfg.inertia_end >= 0.0) || !std::isfinite(*cfg.inertia_end)))
        return Verdict::fail("pso.inertia_end must be finite and >= 0");
    if (!(cfg.vmax_fraction > 0.0) || cfg.vmax_fraction > 1.0) return Verdict::fail("pso.vmax_fraction must be in (0, 1]");
    if (cfg.stagnation_reset < 0) return Verdict::fail("pso.stagnation_reset must be >= 0");
    if (!(cfg.fitness_lambda >= 0.0)) return Verdict::fail("pso.fitness_lambda must be >= 0");
    return Verdict::ok();
}

double pso_fitness(double accuracy, const PerfReport& perf, const ObjectiveSpec& objective, double lambda) {
    const double t = objective.latency_target_ms;
    const double late = std::max(0.0, perf.latency_ms - t) / t;
    return accuracy - lambda * late - lambda * resource_overshoot(perf.resources, objective.res_ub);
}

namespace {

struct Layout {
    std::size_t n;
    std::size_t pools;
    std::size_t rep() const { return 0; }
    std::size_t op(std::size_t i) const { return 1 + i; }
    std::size_t ch(std::size_t i) const { return 1 + n + i; }
    std::size_t pool(std::size_t k) const { return 1 + 2 * n + k; }
    std::size_t q(std::size_t i) const { return 1 + 2 * n + pools + i; }
    std::size_t pf(std::size_t i) const { return 1 + 3 * n + pools + i; }
    std::size_t dims() const { return 1 + 4 * n + pools; }
};

Layout layout_of(const SearchSpace& space) {
    return {static_cast<std::size_t>(space.num_blocks), space.pool_positions.size()};
}

int pick(double x, double lo, double hi) { return round_half_up(std::clamp(x, lo, hi)); }

}  // namespace

PsoEncoding pso_encoding(const SearchSpace& space) {
    const Layout L = layout_of(space);
    PsoEncoding e{std::vector<double>(L.dims(), 0.0), std::vector<double>(L.dims(), 0.0)};
    int pf_lo = INT32_MAX;
    int pf_hi = INT32_MIN;
    for (const Bundle& b : space.bundles)
        for (const OpCandidate& op : b.ops) {
            pf_lo = std::min(pf_lo, op.pf_min);
            pf_hi = std::max(pf_hi, op.pf_max);
        }
    e.lo[L.rep()] = space.min_replications;
    e.hi[L.rep()] = space.num_blocks;
    for (std::size_t i = 0; i < L.n; ++i) {
        e.hi[L.op(i)] = space.candidates_per_block() - 1;
        e.hi[L.ch(i)] = static_cast<double>(space.channel_choices[i].size() - 1);
        e.hi[L.q(i)] = space.quant_choices() - 1;
        e.lo[L.pf(i)] = pf_lo;
        e.hi[L.pf(i)] = pf_hi;
    }
    for (std::size_t k = 0; k < L.pools; ++k) e.hi[L.pool(k)] = 1.0;
    return e;
}

DesignPoint pso_decode(const SearchSpace& space, const std::string& bundle_id, const std::vector<double>& x) {
    const Layout L = layout_of(space);
    const PsoEncoding enc = pso_encoding(space);
    if (x.size() != L.dims()) throw std::invalid_argument("pso_decode: position has the wrong length");
    const auto at = [&](std::size_t d) { return pick(x[d], enc.lo[d], enc.hi[d]); };
    const Bundle& bundle = space.bundle(bundle_id);
    DesignPoint p;
    p.bundle_id = bundle_id;
    p.replications = at(L.rep());
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.replications); ++i) {
        p.op_choice.push_back(at(L.op(i)));
        p.channels.push_back(space.channel_choices[i][static_cast<std::size_t>(at(L.ch(i)))]);
        p.quant_bits.push_back(space.quant_bits[static_cast<std::size_t>(at(L.q(i)))]);
        p.pf.push_back(at(L.pf(i)));
    }
    if (bundle.downsample_capable)
        for (std::size_t k = 0; k < L.pools; ++k)
            if (x[L.pool(k)] >= 0.5 && space.pool_positions[k] < p.replications) p.pools.push_back(space.pool_positions[k]);
    repair(space, p);
    return p;
}

std::vector<double> pso_encode(const SearchSpace& space, const DesignPoint& p, Rng& filler) {
    const Layout L = layout_of(space);
    const PsoEncoding enc = pso_encoding(space);
    std::vector<double> x(L.dims());
    // dimensions of inactive slots get random in-range values
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = enc.lo[d] + uniform01(filler) * (enc.hi[d] - enc.lo[d]);
    x[L.rep()] = p.replications;
    for (std::size_t i = 0; i < static_cast<std::size_t>(p.replications); ++i) {
        const auto& cc = space.channel_choices[i];
        const auto& qb = space.quant_bits;
        x[L.op(i)] = p.op_choice[i];
        x[L.ch(i)] = static_cast<double>(std::find(cc.begin(), cc.end(), p.channels[i]) - cc.begin());
        x[L.q(i)] = static_cast<double>(std::find(qb.begin(), qb.end(), p.quant_bits[i]) - qb.begin());
        x[L.pf(i)] = p.pf[i];
    }
    for (std::size_t k = 0; k < L.pools; ++k) {
        const bool on = std::find(p.pools.begin(), p.pools.end(), space.pool_positions[k]) != p.pools.end();
        x[L.pool(k)] = on ? 1.0 : 0.0;
    }
    return x;
}

namespace {

struct Eval {
    DesignPoint point;
    double fitness = 0.0;
    double accuracy = 0.0;
    double resource = 0.0;
    bool feasible = false;
};

}  // namespace

PsoResult pso_search(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                     const ObjectiveSpec& objective, const PsoConfig& cfg) {
    if (auto v = validate_pso(cfg); !v) throw std::invalid_argument(v.reason);
    const PsoEncoding enc = pso_encoding(space);
    const std::size_t dims = enc.dims();
    const auto swarm_size = static_cast<std::size_t>(cfg.swarm_size);
    const std::uint64_t eval_seed = derive_seed(cfg.seed, "evaluator");

    const auto evaluate_all = [&](const std::vector<Particle>& swarm) {
        return parallel_map<Eval>(swarm.size(), [&](std::size_t k) {
            Eval e;
            e.point = pso_decode(space, space.bundles[static_cast<std::size_t>(swarm[k].group)].id, swarm[k].position);
            const PerfReport perf = evaluate(e.point, space, platform);
            e.feasible = is_feasible(objective, perf);
            e.accuracy = evaluator.accuracy(space, e.point, eval_seed);
            e.resource = resource_scalar(perf.resources, platform);
            e.fitness = pso_fitness(e.accuracy, perf, objective, cfg.fitness_lambda);
            return e;
        });
    };

    PsoResult out;
    std::vector<Particle> swarm(swarm_size);
    for (std::size_t k = 0; k < swarm_size; ++k) {
        Particle& pt = swarm[k];
        pt.group = static_cast<int>(k % space.bundles.size());
        DesignPoint p = sample_uniform(space, derive_seed(cfg.seed, "pso_init", k));
        if (p.bundle_id != space.bundles[static_cast<std::size_t>(pt.group)].id) {
            p.bundle_id = space.bundles[static_cast<std::size_t>(pt.group)].id;
            repair(space, p);
        }
        Rng filler = make_rng(cfg.seed, "pso_fill", k);
        pt.position = pso_encode(space, p, filler);
        pt.velocity.assign(dims, 0.0);
    }

    const std::size_t groups = space.bundles.size();
    std::vector<int> group_best(groups, -1);  // particle index whose pbest leads the group
    int global_best = -1;
    std::optional<DesignPoint> best_point;

    const auto absorb = [&](int iter, const std::vector<Eval>& evals, bool init) {
        for (std::size_t k = 0; k < swarm_size; ++k) {
            Particle& pt = swarm[k];
            const Eval& e = evals[k];
            if (init || e.fitness > pt.best_fitness) {
                pt.best_fitness = e.fitness;
                pt.best_position = pt.position;
                pt.stagnant = 0;
            } else {
                ++pt.stagnant;
            }
            int& gb = group_best[static_cast<std::size_t>(pt.group)];
            if (gb < 0 || pt.best_fitness > swarm[static_cast<std::size_t>(gb)].best_fitness) gb = static_cast<int>(k);
            bool new_gbest = false;
            if (global_best < 0 || pt.best_fitness > out.best_fitness) {
                global_best = static_cast<int>(k);
                out.best_fitness = pt.best_fitness;
                best_point = e.point;
                new_gbest = true;
            }
            out.trace.records.push_back(Json{{"iter", iter},
                                             {"particle", k},
                                             {"fitness", e.fitness},
                                             {"feasible", e.feasible},
                                             {"is_new_gbest", new_gbest},
                                             {"accuracy", e.accuracy},
                                             {"resource_scalar", e.resource},
                                             {"point", to_json(e.point)}});
        }
        out.gbest_history.push_back(out.best_fitness);
    };

    absorb(0, evaluate_all(swarm), true);
    std::vector<double> gbest_position = swarm[static_cast<std::size_t>(global_best)].best_position;

    for (int it = 1; it <= cfg.iters; ++it) {
        double w = cfg.inertia;
        if (cfg.inertia_end && cfg.iters > 1)
            w = cfg.inertia + (*cfg.inertia_end - cfg.inertia) * static_cast<double>(it - 1) / static_cast<double>(cfg.iters - 1);
        for (std::size_t k = 0; k < swarm_size; ++k) {
            Particle& pt = swarm[k];
            if (cfg.stagnation_reset > 0 && pt.stagnant >= cfg.stagnation_reset) {
                // re-seed in place of a move so the fresh sample is what gets evaluated
                const std::uint64_t idx = static_cast<std::uint64_t>(it) * swarm_size + k;
                DesignPoint p = sample_uniform(space, derive_seed(cfg.seed, "pso_reset", idx));
                p.bundle_id = space.bundles[static_cast<std::size_t>(pt.group)].id;
                repair(space, p);
                Rng filler = make_rng(cfg.seed, "pso_reset_fill", idx);
                pt.position = pso_encode(space, p, filler);
                pt.velocity.assign(dims, 0.0);
                pt.stagnant = 0;
                continue;
            }
            const auto& grp = swarm[static_cast<std::size_t>(group_best[static_cast<std::size_t>(pt.group)])].best_position;
            Rng rng = make_rng(cfg.seed, "pso_r", static_cast<std::uint64_t>(it) * swarm_size + k);
            for (std::size_t d = 0; d < dims; ++d) {
                const double r1 = uniform01(rng);
                const double r2 = uniform01(rng);
                const double r3 = uniform01(rng);
                const double x = pt.position[d];
                double v = w * pt.velocity[d] + cfg.cognitive * r1 * (pt.best_position[d] - x) +
                           cfg.social * r2 * (gbest_position[d] - x) + cfg.group_social * r3 * (grp[d] - x);
                const double vmax = cfg.vmax_fraction * (enc.hi[d] - enc.lo[d]);
                v = std::clamp(v, -vmax, vmax);
                pt.velocity[d] = v;
                pt.position[d] = std::clamp(x + v, enc.lo[d], enc.hi[d]);
            }
        }
        const double before = out.best_fitness;
        absorb(it, evaluate_all(swarm), false);
        if (out.best_fitness < before) throw std::logic_error("pso: global best fitness decreased");
        gbest_position = swarm[static_cast<std::size_t>(global_best)].best_position;
    }

    out.best = *best_point;
    out.best_terms = evaluate_objective(out.best, space, platform, objective, evaluator, eval_seed);
    out.swarm = std::move(swarm);
    return out;
}

}  // namespace codesign
