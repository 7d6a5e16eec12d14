// SPDX-License-Identifier: Apache-2.0
#include "codesign/scd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "codesign/parallel.hpp"
#include "codesign/rng.hpp"

namespace codesign {

const char* to_string(ScdCoord c) {
    switch (c) {
    case ScdCoord::Replications: return "replications";
    case ScdCoord::Pools: return "pools";
    case ScdCoord::Channels: return "channels";
    case ScdCoord::Quant: return "quant";
    case ScdCoord::Pf: return "pf";
    case ScdCoord::Op: return "op";
    }
    return "?";
}

ScdCoord scd_coord_from_string(const std::string& name) {
    for (ScdCoord c : {ScdCoord::Replications, ScdCoord::Pools, ScdCoord::Channels, ScdCoord::Quant, ScdCoord::Pf, ScdCoord::Op})
        if (name == to_string(c)) return c;
    throw std::invalid_argument("unknown SCD coordinate '" + name + "'");
}

Verdict validate_scd(const ScdConfig& cfg) {
    if (cfg.max_iters < 1) return Verdict::fail("scd.max_iters must be >= 1");
    if (cfg.coords.empty()) return Verdict::fail("scd.coords must not be empty");
    if (cfg.restarts < 1) return Verdict::fail("scd.restarts must be >= 1");
    if (cfg.patience < 0) return Verdict::fail("scd.patience must be >= 0");
    if (cfg.init_attempts < 1) return Verdict::fail("scd.init_attempts must be >= 1");
    for (const auto& [c, r] : cfg.proposal_radius)
        if (r < 1) return Verdict::fail(std::string("scd.proposal_radius.") + to_string(c) + " must be >= 1");
    return Verdict::ok();
}

namespace {

int index_of(const std::vector<int>& v, int x) {
    const auto it = std::find(v.begin(), v.end(), x);
    return it == v.end() ? 0 : static_cast<int>(it - v.begin());
}

// Move `index` by 1..radius steps in a random direction inside [0, size);
// bounces off the ends.
int step_index(Rng& rng, int index, int size, int radius) {
    if (size <= 1) return index;
    const int delta = uniform_int(rng, 1, radius);
    const bool up = (rng() >> 63) != 0;
    int next = up ? index + delta : index - delta;
    if (next < 0 || next >= size) next = up ? index - delta : index + delta;
    return std::clamp(next, 0, size - 1);
}

struct Proposal {
    DesignPoint point;
    std::vector<int> touched;  // slots whose op or shape the move changed
};

Proposal propose(const SearchSpace& space, const DesignPoint& cur, ScdCoord coord, int radius, Rng& rng) {
    Proposal out{cur, {}};
    DesignPoint& p = out.point;
    const Bundle& bundle = space.bundle(cur.bundle_id);
    const int n = cur.replications;
    const auto slot = static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    switch (coord) {
    case ScdCoord::Replications: {
        const int next = space.min_replications + step_index(rng, n - space.min_replications,
                                                             space.num_blocks - space.min_replications + 1, radius);
        while (p.replications < next) {
            // grow by repeating the last slot's configuration
            const auto last = static_cast<std::size_t>(p.replications - 1);
            const auto& cc = space.channel_choices[static_cast<std::size_t>(p.replications)];
            const auto nearest = std::min_element(cc.begin(), cc.end(), [&](int a, int b) {
                return std::abs(a - p.channels[last]) < std::abs(b - p.channels[last]);
            });
            p.op_choice.push_back(p.op_choice[last]);
            p.channels.push_back(*nearest);
            p.quant_bits.push_back(p.quant_bits[last]);
            p.pf.push_back(p.pf[last]);
            out.touched.push_back(p.replications);
            ++p.replications;
        }
        while (p.replications > next) {
            p.op_choice.pop_back();
            p.channels.pop_back();
            p.quant_bits.pop_back();
            p.pf.pop_back();
            --p.replications;
        }
        std::erase_if(p.pools, [&](int pos) { return pos >= p.replications; });
        break;
    }
    case ScdCoord::Pools: {
        std::vector<int> cands;
        if (bundle.downsample_capable)
            for (int pos : space.pool_positions)
                if (pos < n) cands.push_back(pos);
        if (cands.empty()) break;
        const int pos = cands[uniform_index(rng, cands.size())];
        if (auto it = std::find(p.pools.begin(), p.pools.end(), pos); it != p.pools.end()) {
            p.pools.erase(it);
        } else {
            p.pools.insert(std::upper_bound(p.pools.begin(), p.pools.end(), pos), pos);
        }
        break;
    }
    case ScdCoord::Channels: {
        const auto& cc = space.channel_choices[slot];
        p.channels[slot] = cc[static_cast<std::size_t>(step_index(rng, index_of(cc, p.channels[slot]), static_cast<int>(cc.size()), radius))];
        out.touched.push_back(static_cast<int>(slot));
        break;
    }
    case ScdCoord::Quant: {
        const auto& allowed = bundle.ops[static_cast<std::size_t>(p.op_choice[slot])].allowed_quant_bits;
        p.quant_bits[slot] = allowed[static_cast<std::size_t>(
            step_index(rng, index_of(allowed, p.quant_bits[slot]), static_cast<int>(allowed.size()), radius))];
        break;
    }
    case ScdCoord::Pf: {
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(p.op_choice[slot])];
        p.pf[slot] = op.pf_min + step_index(rng, p.pf[slot] - op.pf_min, op.pf_max - op.pf_min + 1, radius);
        break;
    }
    case ScdCoord::Op: {
        p.op_choice[slot] = step_index(rng, p.op_choice[slot], static_cast<int>(bundle.ops.size()), radius);
        // a new op may not accept the old q/pf
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(p.op_choice[slot])];
        const auto& allowed = op.allowed_quant_bits;
        if (std::find(allowed.begin(), allowed.end(), p.quant_bits[slot]) == allowed.end()) {
            const auto nearest = std::min_element(allowed.begin(), allowed.end(), [&](int a, int b) {
                return std::abs(a - p.quant_bits[slot]) < std::abs(b - p.quant_bits[slot]);
            });
            p.quant_bits[slot] = *nearest;
        }
        p.pf[slot] = std::clamp(p.pf[slot], op.pf_min, op.pf_max);
        out.touched.push_back(static_cast<int>(slot));
        break;
    }
    }
    return out;
}

struct Evaluated {
    bool valid = false;
    bool feasible = false;
    ObjectiveTerms terms;
};

class Scorer {
public:
    Scorer(const SearchSpace& s, const PlatformModel& p, const AccuracyEvaluator& e, const ObjectiveSpec& o, std::uint64_t seed)
        : space_(s), platform_(p), evaluator_(e), objective_(o), eval_seed_(seed) {}

    bool feasible(const PerfReport& perf) const { return is_feasible(objective_, perf); }
    double acc_loss(const DesignPoint& point) const { return evaluator_.acc_loss(space_, point, eval_seed_); }

    Evaluated score(const DesignPoint& point) const {
        Evaluated e;
        e.valid = static_cast<bool>(validate(space_, point));
        if (!e.valid) return e;
        e.terms.perf = evaluate(point, space_, platform_);
        e.feasible = is_feasible(objective_, e.terms.perf);
        e.terms.feasible = e.feasible;
        if (!e.feasible) return e;  // objective only matters for feasible points
        const Assessment a = evaluator_.assess(space_, point, eval_seed_);
        e.terms.acc_loss = a.acc_loss;
        e.terms.accuracy = a.accuracy;
        e.terms.perf_loss = perf_loss_ms(e.terms.perf, objective_.perf_mode, platform_);
        e.terms.penalty = discrete_penalty(objective_, e.terms.perf.resources);
        e.terms.total = e.terms.acc_loss * e.terms.perf_loss + e.terms.penalty;
        return e;
    }

    const SearchSpace& space() const { return space_; }
    const PlatformModel& platform() const { return platform_; }

private:
    const SearchSpace& space_;
    const PlatformModel& platform_;
    const AccuracyEvaluator& evaluator_;
    const ObjectiveSpec& objective_;
    std::uint64_t eval_seed_;
};

// Projection back onto the feasible set after a move broke a constraint.
// Re-chooses the knobs that never change acc_loss (pf everywhere when the
// combination count allows, else on the touched slots; the pool set unless
// pools were the move) and, after an architecture move, the bitwidths (again
// every slot when affordable, else the touched ones). Keeps the feasible completion with the lowest acc_loss, then
// the lowest resource scalar; ties go to the first in enumeration order.
struct RefitScope {
    std::vector<int> touched;
    bool quant = false;
    bool pools = true;
};

bool refit(const Scorer& scorer, DesignPoint& point, const RefitScope& scope, long long max_combinations) {
    const SearchSpace& space = scorer.space();
    if (!validate(space, point)) return false;
    const Bundle& bundle = space.bundle(point.bundle_id);
    const auto n = static_cast<std::size_t>(point.replications);
    const auto op_of = [&](std::size_t i) -> const OpCandidate& { return bundle.ops[static_cast<std::size_t>(point.op_choice[i])]; };

    // Each dimension is a list of setters; the product is enumerated in
    // mixed radix with the first dimension fastest.
    struct Dim {
        enum Kind { Pf, Quant, Pools } kind;
        std::size_t slot;
        std::vector<int> values;                 // pf or q
        std::vector<std::vector<int>> pool_sets;  // pools
        std::size_t size() const { return kind == Pools ? pool_sets.size() : values.size(); }
    };
    const auto pf_dim = [&](std::size_t i) {
        Dim d{Dim::Pf, i, {}, {}};
        for (int v = op_of(i).pf_min; v <= op_of(i).pf_max; ++v) d.values.push_back(v);
        return d;
    };
    const auto q_dim = [&](std::size_t i) { return Dim{Dim::Quant, i, op_of(i).allowed_quant_bits, {}}; };
    std::vector<Dim> fixed_dims;
    if (scope.pools && bundle.downsample_capable) {
        std::vector<int> allowed;
        for (int pos : space.pool_positions)
            if (pos < point.replications) allowed.push_back(pos);
        if (!allowed.empty() && allowed.size() < 16) {
            Dim d{Dim::Pools, 0, {}, {}};
            for (std::uint32_t mask = 0; mask < (1U << allowed.size()); ++mask) {
                std::vector<int> set;
                for (std::size_t b = 0; b < allowed.size(); ++b)
                    if (mask & (1U << b)) set.push_back(allowed[b]);
                d.pool_sets.push_back(std::move(set));
            }
            fixed_dims.push_back(std::move(d));
        }
    }
    const auto count = [](const std::vector<Dim>& dims) {
        long long c = 1;
        for (const auto& d : dims) {
            c *= static_cast<long long>(d.size());
            if (c > (1LL << 40)) break;
        }
        return c;
    };
    // Widest scope first: every slot, then bitwidth on touched slots only,
    // then touched slots only for both.
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> touched;
    for (int t : scope.touched) touched.push_back(static_cast<std::size_t>(t));
    const std::vector<std::pair<const std::vector<std::size_t>*, const std::vector<std::size_t>*>> plans{
        {&all, &all}, {&touched, &all}, {&touched, &touched}};
    std::vector<Dim> dims;
    bool fits = false;
    for (const auto& [q_slots, pf_slots] : plans) {
        dims = fixed_dims;
        if (scope.quant)
            for (std::size_t i : *q_slots) dims.push_back(q_dim(i));
        for (std::size_t i : *pf_slots) dims.push_back(pf_dim(i));
        if (count(dims) <= max_combinations) {
            fits = true;
            break;
        }
    }
    if (!fits || dims.empty()) return false;

    std::map<std::vector<int>, double> acc_cache;  // acc_loss only depends on q here
    std::vector<std::size_t> digit(dims.size(), 0);
    std::optional<DesignPoint> best;
    double best_acc = 0.0;
    double best_res = 0.0;
    DesignPoint trial = point;
    while (true) {
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const Dim& d = dims[k];
            switch (d.kind) {
            case Dim::Pf: trial.pf[d.slot] = d.values[digit[k]]; break;
            case Dim::Quant: trial.quant_bits[d.slot] = d.values[digit[k]]; break;
            case Dim::Pools: trial.pools = d.pool_sets[digit[k]]; break;
            }
        }
        if (validate(space, trial)) {
            const PerfReport perf = evaluate(trial, space, scorer.platform());
            if (scorer.feasible(perf)) {
                auto it = acc_cache.find(trial.quant_bits);
                if (it == acc_cache.end()) it = acc_cache.emplace(trial.quant_bits, scorer.acc_loss(trial)).first;
                const double acc = it->second;
                const double res = resource_scalar(perf.resources, scorer.platform());
                if (!best || acc < best_acc || (acc == best_acc && res < best_res)) {
                    best = trial;
                    best_acc = acc;
                    best_res = res;
                }
            }
        }
        std::size_t k = 0;
        while (k < dims.size() && ++digit[k] == dims[k].size()) digit[k++] = 0;
        if (k == dims.size()) break;
    }
    if (!best) return false;
    point = *best;
    return true;
}

}  // namespace

ScdRun scd_restart(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                   const ObjectiveSpec& objective, const ScdConfig& cfg, int restart, SearchTrace& trace) {
    if (auto v = validate_scd(cfg); !v) throw std::invalid_argument(v.reason);
    const Scorer scorer(space, platform, evaluator, objective, derive_seed(cfg.seed, "evaluator"));
    const auto r = static_cast<std::uint64_t>(restart);

    std::optional<DesignPoint> start;
    Evaluated cur_eval;
    for (int attempt = 0; attempt < cfg.init_attempts && !start; ++attempt) {
        DesignPoint p = sample_uniform(space, derive_seed(cfg.seed, "scd_init", r * 1'000'003ULL + static_cast<std::uint64_t>(attempt)));
        if (cfg.bundle_id && p.bundle_id != *cfg.bundle_id) {
            p.bundle_id = *cfg.bundle_id;
            const Bundle& b = space.bundle(p.bundle_id);
            for (int& m : p.op_choice) m = std::min(m, static_cast<int>(b.ops.size()) - 1);
            repair(space, p);
        }
        Evaluated e = scorer.score(p);
        if (e.feasible) {
            start = std::move(p);
            cur_eval = std::move(e);
        }
    }
    if (!start)
        throw InfeasibleError("scd: no feasible initial point within " + std::to_string(cfg.init_attempts) + " attempts");

    ScdRun run;
    DesignPoint cur = *start;
    run.accepted_objectives.push_back(cur_eval.terms.acc_loss);
    trace.records.push_back(Json{{"restart", restart},     {"iter", 0},      {"coord", "init"},
                                 {"proposal", to_json(cur)}, {"feasible", true}, {"objective", cur_eval.terms.acc_loss},
                                 {"accepted", true},         {"latency_ms", cur_eval.terms.perf.latency_ms},
                                 {"accuracy", cur_eval.terms.accuracy},
                                 {"resource_scalar", resource_scalar(cur_eval.terms.perf.resources, platform)}});

    Rng rng = make_rng(cfg.seed, "scd", r);
    int rejections = 0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const ScdCoord coord = cfg.coords[uniform_index(rng, cfg.coords.size())];
        const auto radius_it = cfg.proposal_radius.find(coord);
        const int radius = radius_it == cfg.proposal_radius.end() ? 1 : radius_it->second;
        Proposal prop = propose(space, cur, coord, radius, rng);
        Evaluated e = scorer.score(prop.point);
        if (!e.feasible && e.valid && cfg.refit && coord != ScdCoord::Pf) {
            const bool arch_move = coord != ScdCoord::Quant && coord != ScdCoord::Pools;
            const RefitScope scope{prop.touched, arch_move, coord != ScdCoord::Pools};
            if (refit(scorer, prop.point, scope, cfg.refit_max_combinations)) e = scorer.score(prop.point);
        }
        const bool accepted = e.feasible && e.terms.acc_loss < cur_eval.terms.acc_loss;
        Json rec{{"restart", restart}, {"iter", it}, {"coord", to_string(coord)}, {"proposal", to_json(prop.point)},
                 {"feasible", e.feasible}};
        rec["objective"] = e.feasible ? Json(e.terms.acc_loss) : Json(nullptr);
        rec["accepted"] = accepted;
        rec["latency_ms"] = e.valid ? Json(e.terms.perf.latency_ms) : Json(nullptr);
        rec["accuracy"] = e.feasible ? Json(e.terms.accuracy) : Json(nullptr);
        rec["resource_scalar"] = e.valid ? Json(resource_scalar(e.terms.perf.resources, platform)) : Json(nullptr);
        trace.records.push_back(std::move(rec));
        run.iterations = it;
        if (accepted) {
            cur = std::move(prop.point);
            cur_eval = std::move(e);
            run.accepted_objectives.push_back(cur_eval.terms.acc_loss);
            rejections = 0;
        } else if (cfg.patience > 0 && ++rejections >= cfg.patience) {
            break;
        }
    }
    run.best = cur;
    run.best_terms = cur_eval.terms;
    return run;
}

ScdResult scd_search(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                     const ObjectiveSpec& objective, const ScdConfig& cfg) {
    if (auto v = validate_scd(cfg); !v) throw std::invalid_argument(v.reason);
    struct Out {
        ScdRun run;
        SearchTrace trace;
    };
    auto outs = parallel_map<Out>(static_cast<std::size_t>(cfg.restarts), [&](std::size_t r) {
        Out o;
        o.run = scd_restart(space, platform, evaluator, objective, cfg, static_cast<int>(r), o.trace);
        return o;
    });
    ScdResult result;
    std::size_t best = 0;
    for (std::size_t r = 0; r < outs.size(); ++r) {
        if (outs[r].run.best_terms.acc_loss < outs[best].run.best_terms.acc_loss) best = r;
        for (auto& rec : outs[r].trace.records) result.trace.records.push_back(std::move(rec));
        result.runs.push_back(outs[r].run);
    }
    result.best = outs[best].run.best;
    result.best_terms = outs[best].run.best_terms;
    return result;
}

}  // namespace codesign
