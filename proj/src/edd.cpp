// SPDX-License-Identifier: Apache-2.0
#include "codesign/edd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace codesign {

namespace {

DesignPoint skeleton_point(const SearchSpace& space, const EddSkeleton& sk) {
    DesignPoint p;
    p.bundle_id = sk.bundle_id;
    p.replications = static_cast<int>(sk.channels.size());
    p.channels = sk.channels;
    p.pools = sk.pools;
    const Bundle& b = space.bundle(sk.bundle_id);
    for (int i = 0; i < p.replications; ++i) {
        p.op_choice.push_back(0);
        p.quant_bits.push_back(b.ops.front().allowed_quant_bits.front());
        p.pf.push_back(b.ops.front().pf_min);
    }
    return p;
}

// Indices into space.quant_bits allowed by `op`.
std::vector<int> allowed_indices(const SearchSpace& space, const OpCandidate& op) {
    std::vector<int> out;
    for (int b = 0; b < space.quant_choices(); ++b)
        if (std::find(op.allowed_quant_bits.begin(), op.allowed_quant_bits.end(), space.quant_bits[static_cast<std::size_t>(b)]) !=
            op.allowed_quant_bits.end())
            out.push_back(b);
    return out;
}

std::string var_name(const char* family, std::initializer_list<int> idx) {
    std::string s = family;
    for (int i : idx) s += '.' + std::to_string(i);
    return s;
}

}  // namespace

Verdict validate_edd(const EddConfig& cfg, const SearchSpace& space) {
    if (cfg.epochs < 0) return Verdict::fail("edd.epochs must be >= 0");
    for (double lr : {cfg.lr_theta, cfg.lr_phi, cfg.lr_pf})
        if (!(lr >= 0.0) || !std::isfinite(lr)) return Verdict::fail("edd learning rates must be finite and >= 0");
    if (cfg.grad_clip && !(*cfg.grad_clip > 0.0)) return Verdict::fail("edd.grad_clip must be > 0");
    if (auto v = validate_gumbel(cfg.gumbel); !v) return v;
    const auto& sk = cfg.skeleton;
    if (space.bundle_index(sk.bundle_id) < 0) return Verdict::fail("edd.skeleton.bundle_id '" + sk.bundle_id + "' not in space");
    if (static_cast<int>(sk.channels.size()) != space.num_blocks)
        return Verdict::fail("edd.skeleton.channels must have one entry per block (" + std::to_string(space.num_blocks) + ")");
    if (auto v = validate(space, skeleton_point(space, sk)); !v) return Verdict::fail("edd.skeleton: " + v.reason);
    return Verdict::ok();
}

RelaxedState initial_state(const SearchSpace& space, const EddSkeleton& sk) {
    RelaxedState s;
    s.n = space.num_blocks;
    s.m = space.candidates_per_block();
    s.q = space.quant_choices();
    s.theta.assign(static_cast<std::size_t>(s.n * s.m), 0.0);
    s.phi.assign(static_cast<std::size_t>(s.n * s.m * s.q), 0.0);
    s.pf_cont.assign(static_cast<std::size_t>(s.n * s.m), 0.0);
    const Bundle& b = space.bundle(sk.bundle_id);
    for (int i = 0; i < s.n; ++i)
        for (int k = 0; k < s.m; ++k) {
            const OpCandidate& op = b.ops[static_cast<std::size_t>(k)];
            s.pf_cont[s.ti(i, k)] = 0.5 * (op.pf_min + op.pf_max);
        }
    return s;
}

void clamp_pf(RelaxedState& s, const SearchSpace& space, const EddSkeleton& sk) {
    const Bundle& b = space.bundle(sk.bundle_id);
    for (int i = 0; i < s.n; ++i)
        for (int k = 0; k < s.m; ++k) {
            const OpCandidate& op = b.ops[static_cast<std::size_t>(k)];
            double& v = s.pf_cont[s.ti(i, k)];
            v = std::clamp(v, static_cast<double>(op.pf_min), static_cast<double>(op.pf_max));
        }
}

Verdict validate_state(const RelaxedState& s, const SearchSpace& space) {
    if (s.n != space.num_blocks || s.m != space.candidates_per_block() || s.q != space.quant_choices())
        return Verdict::fail("relaxed state dimensions do not match the space");
    if (s.theta.size() != static_cast<std::size_t>(s.n * s.m) || s.pf_cont.size() != static_cast<std::size_t>(s.n * s.m) ||
        s.phi.size() != static_cast<std::size_t>(s.n * s.m * s.q))
        return Verdict::fail("relaxed state array sizes do not match n, m, q");
    for (const auto* arr : {&s.theta, &s.phi, &s.pf_cont})
        for (double v : *arr)
            if (!std::isfinite(v)) return Verdict::fail("relaxed state holds a non-finite entry");
    return Verdict::ok();
}

EddNoise draw_noise(const SearchSpace& space, const EddSkeleton& sk, Rng& rng) {
    const Bundle& b = space.bundle(sk.bundle_id);
    const auto n = static_cast<std::size_t>(space.num_blocks);
    EddNoise z;
    z.op.resize(n);
    z.quant.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        z.op[i] = gumbel_noise(rng, b.ops.size());
        z.quant[i].resize(b.ops.size());
        for (std::size_t k = 0; k < b.ops.size(); ++k)
            if (!b.ops[k].zero_mac()) z.quant[i][k] = gumbel_noise(rng, allowed_indices(space, b.ops[k]).size());
    }
    return z;
}

RelaxedLoss build_relaxed_loss(const RelaxedState& s, const SearchSpace& space, const PlatformModel& platform,
                               const SurrogateParams& surrogate, const ObjectiveSpec& objective, const EddSkeleton& sk,
                               const EddNoise& noise, double tau, ad::Tape& tape) {
    if (auto v = validate_state(s, space); !v) throw std::invalid_argument(v.reason);
    const Bundle& b = space.bundle(sk.bundle_id);
    const auto slot_shapes = shapes(space, skeleton_point(space, sk));
    const double overhead = static_cast<double>(platform.overhead_cycles_per_op);

    ad::Var zero = tape.constant(0.0);
    ad::Var weights = zero;
    ad::Var depth = zero;
    ad::Var qpen = zero;
    SmoothResources<ad::Var> res{zero, zero, zero};
    std::vector<ad::Var> block_cycles;

    for (int i = 0; i < s.n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        std::vector<ad::Var> logits;
        for (int k = 0; k < s.m; ++k) logits.push_back(tape.variable(s.theta[s.ti(i, k)], var_name("theta", {i, k})));
        const auto g = gumbel_softmax(tape, logits, noise.op.at(iu), tau);

        ad::Var cycles = zero;
        for (int k = 0; k < s.m; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const OpCandidate& op = b.ops[ku];
            const SlotShape& shape = slot_shapes[iu];
            if (op.zero_mac()) {
                if (overhead != 0.0) cycles = cycles + g[ku] * overhead;
                continue;
            }
            ad::Var pf = tape.variable(s.pf_cont[s.ti(i, k)], var_name("pf", {i, k}));
            const auto allowed = allowed_indices(space, op);
            std::vector<ad::Var> phi;
            for (int bq : allowed) phi.push_back(tape.variable(s.phi[s.pi(i, k, bq)], var_name("phi", {i, k, bq})));
            const auto qh = gumbel_softmax(tape, phi, noise.quant.at(iu).at(ku), tau);

            ad::Var op_cycles = zero;
            ad::Var op_qpen = zero;
            SmoothResources<ad::Var> op_res{zero, zero, zero};
            for (std::size_t a = 0; a < allowed.size(); ++a) {
                const int q = space.quant_bits[static_cast<std::size_t>(allowed[a])];
                op_cycles = op_cycles + qh[a] * op_cycles_smooth(op, shape, q, pf, platform);
                const auto r = op_resources_smooth(op, shape, q, pf, platform);
                op_res.dsp = op_res.dsp + qh[a] * r.dsp;
                op_res.bram_kbit = op_res.bram_kbit + qh[a] * r.bram_kbit;
                op_res.lut = op_res.lut + qh[a] * r.lut;
                const double pen = surrogate.quant_penalty.at(q);
                if (pen != 0.0) op_qpen = op_qpen + qh[a] * pen;
            }
            cycles = cycles + g[ku] * op_cycles;
            res.dsp = res.dsp + g[ku] * op_res.dsp;
            res.bram_kbit = res.bram_kbit + g[ku] * op_res.bram_kbit;
            res.lut = res.lut + g[ku] * op_res.lut;
            weights = weights + g[ku] * static_cast<double>(op_weight_count(op, shape));
            depth = depth + g[ku];
            qpen = qpen + g[ku] * op_qpen;
        }
        block_cycles.push_back(cycles);
    }

    const double per_ms = platform.clock_mhz * 1e3;
    ad::Var perf = zero;
    if (objective.perf_mode == PerfMode::LatencySum) {
        for (ad::Var c : block_cycles) perf = perf + c;
    } else {
        perf = block_cycles.front();
        for (std::size_t i = 1; i < block_cycles.size(); ++i) perf = smooth_max(perf, block_cycles[i], platform.smooth_sharpness);
    }
    perf = perf / per_ms;

    ad::Var acc = surrogate_acc_loss(surrogate, log(weights + 1.0), depth, qpen / static_cast<double>(s.n));

    const double k = objective.penalty_sharpness;
    const auto over = [&](ad::Var used, double ub) { return softplus((used - ub) / ub, k); };
    ad::Var exponent = over(res.dsp, objective.res_ub.dsp) + over(res.bram_kbit, objective.res_ub.bram_kbit) +
                       over(res.lut, objective.res_ub.lut);
    ad::Var penalty = exp(exponent * std::log(objective.penalty_base)) * objective.beta;

    return {acc * perf + penalty, acc, perf, penalty, res};
}

DesignPoint derive_discrete(const RelaxedState& s, const SearchSpace& space, const EddSkeleton& sk) {
    if (auto v = validate_state(s, space); !v) throw std::invalid_argument(v.reason);
    DesignPoint p = skeleton_point(space, sk);
    const Bundle& b = space.bundle(sk.bundle_id);
    for (int i = 0; i < s.n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        int best = 0;
        for (int k = 1; k < s.m; ++k)
            if (s.theta[s.ti(i, k)] > s.theta[s.ti(i, best)]) best = k;
        const OpCandidate& op = b.ops[static_cast<std::size_t>(best)];
        const auto allowed = allowed_indices(space, op);
        int bq = allowed.front();
        for (int a : allowed)
            if (s.phi[s.pi(i, best, a)] > s.phi[s.pi(i, best, bq)]) bq = a;
        p.op_choice[iu] = best;
        p.quant_bits[iu] = space.quant_bits[static_cast<std::size_t>(bq)];
        p.pf[iu] = std::clamp(round_half_up(s.pf_cont[s.ti(i, best)]), op.pf_min, op.pf_max);
    }
    return p;
}

EddResult edd_search(const SearchSpace& space, const PlatformModel& platform, const SurrogateEvaluator& surrogate,
                     const ObjectiveSpec& objective, const EddConfig& cfg) {
    if (auto v = validate_edd(cfg, space); !v) throw std::invalid_argument(v.reason);
    if (auto v = validate_objective(objective); !v) throw std::invalid_argument(v.reason);
    EddResult out;
    RelaxedState state = initial_state(space, cfg.skeleton);
    ad::Tape tape;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double tau = cfg.gumbel.tau_at(epoch);
        Rng rng = make_rng(cfg.seed, "edd_gumbel", static_cast<std::uint64_t>(epoch));
        const EddNoise noise = draw_noise(space, cfg.skeleton, rng);
        tape.clear();
        const RelaxedLoss L = build_relaxed_loss(state, space, platform, surrogate.params(), objective, cfg.skeleton, noise, tau, tape);
        if (!std::isfinite(L.loss.value())) {
            out.aborted = true;
            break;
        }
        out.trace.records.push_back(Json{{"epoch", epoch},
                                         {"loss", L.loss.value()},
                                         {"acc_loss", L.acc_loss.value()},
                                         {"perf_loss", L.perf_loss.value()},
                                         {"penalty", L.penalty.value()},
                                         {"tau", tau}});

        std::set<std::string> names;
        std::map<std::string, double> params;
        for (const auto& [name, id] : tape.variables()) {
            names.insert(name);
            params[name] = tape.value(ad::Var{&tape, id});
        }
        const auto grads = ad::grad(tape, L.loss, names);
        const auto family_step = [&](const char* prefix, double lr) {
            if (lr == 0.0) return;
            std::map<std::string, double> p;
            std::map<std::string, double> g;
            for (const auto& [name, v] : params)
                if (name.rfind(prefix, 0) == 0) {
                    p[name] = v;
                    g[name] = grads.at(name);
                }
            if (p.empty()) return;
            for (const auto& [name, v] : ad::sgd_step(p, g, lr, cfg.grad_clip)) params[name] = v;
        };
        family_step("theta.", cfg.lr_theta);
        family_step("phi.", cfg.lr_phi);
        family_step("pf.", cfg.lr_pf);

        for (int i = 0; i < state.n; ++i)
            for (int k = 0; k < state.m; ++k) {
                if (auto it = params.find(var_name("theta", {i, k})); it != params.end()) state.theta[state.ti(i, k)] = it->second;
                if (auto it = params.find(var_name("pf", {i, k})); it != params.end()) state.pf_cont[state.ti(i, k)] = it->second;
                for (int b = 0; b < state.q; ++b)
                    if (auto it = params.find(var_name("phi", {i, k, b})); it != params.end()) state.phi[state.pi(i, k, b)] = it->second;
            }
        clamp_pf(state, space, cfg.skeleton);
        out.epochs_run = epoch + 1;
    }

    out.state = state;
    out.best = derive_discrete(state, space, cfg.skeleton);
    out.best_terms = evaluate_objective(out.best, space, platform, objective, surrogate, derive_seed(cfg.seed, "evaluator"));
    return out;
}

Json to_json(const RelaxedState& s) {
    Json j;
    j["n"] = s.n;
    j["m"] = s.m;
    j["q"] = s.q;
    j["theta"] = s.theta;
    j["phi"] = s.phi;
    j["pf_cont"] = s.pf_cont;
    return j;
}

RelaxedState relaxed_state_from_json(const nlohmann::json& j) {
    RelaxedState s;
    s.n = j.at("n").get<int>();
    s.m = j.at("m").get<int>();
    s.q = j.at("q").get<int>();
    s.theta = j.at("theta").get<std::vector<double>>();
    s.phi = j.at("phi").get<std::vector<double>>();
    s.pf_cont = j.at("pf_cont").get<std::vector<double>>();
    return s;
}

}  // namespace codesign
