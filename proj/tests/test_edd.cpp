// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "doctest.h"
#include "support.hpp"

#include "codesign/config.hpp"
#include "codesign/edd.hpp"

using namespace codesign;
using namespace testing;

namespace {

EddSkeleton small_skeleton() { return {"a", {8, 16, 32}, {1}}; }

RelaxedState random_state(const SearchSpace& s, const EddSkeleton& sk, Rng& rng, double spread = 2.0) {
    RelaxedState st = initial_state(s, sk);
    for (double& v : st.theta) v = spread * (2.0 * uniform01(rng) - 1.0);
    for (double& v : st.phi) v = spread * (2.0 * uniform01(rng) - 1.0);
    const Bundle& b = s.bundle(sk.bundle_id);
    for (int i = 0; i < st.n; ++i)
        for (int k = 0; k < st.m; ++k) {
            const OpCandidate& op = b.ops[static_cast<std::size_t>(k)];
            st.pf_cont[st.ti(i, k)] = op.pf_min + (op.pf_max - op.pf_min) * uniform01(rng);
        }
    return st;
}

double loss_at(const RelaxedState& st, const SearchSpace& s, const PlatformModel& plat, const ObjectiveSpec& obj,
               const EddSkeleton& sk, const EddNoise& z, double tau) {
    ad::Tape t;
    return build_relaxed_loss(st, s, plat, SurrogateParams{}, obj, sk, z, tau, t).loss.value();
}

// A platform the small space can overrun, so the penalty is active for some states.
PlatformModel tight_platform() {
    PlatformModel p = roomy_platform();
    p.dsp_budget = 64;
    p.bram_budget_kbit = 512;
    p.lut_budget = 20000;
    p.overhead_cycles_per_op = 100;
    return p;
}

}  // namespace

TEST_CASE("zero learning rates leave the state unchanged") {
    const SearchSpace s = small_space();
    EddConfig cfg;
    cfg.skeleton = small_skeleton();
    cfg.epochs = 10;
    cfg.lr_theta = cfg.lr_phi = cfg.lr_pf = 0.0;
    const EddResult r = edd_search(s, tight_platform(), SurrogateEvaluator{SurrogateParams{}}, objective_for(tight_platform()), cfg);
    CHECK(r.state == initial_state(s, cfg.skeleton));
    CHECK(r.epochs_run == 10);
    CHECK(r.trace.records.size() == 10);
}

TEST_CASE("searches are deterministic") {
    const RunConfig rc = load_run_config(source_dir() / "configs" / "toy_edd.json");
    EddConfig cfg = std::get<EddConfig>(rc.strategy);
    cfg.epochs = 60;
    const SurrogateEvaluator ev(rc.evaluator.surrogate);
    const EddResult a = edd_search(rc.space, rc.platform, ev, rc.objective, cfg);
    const EddResult b = edd_search(rc.space, rc.platform, ev, rc.objective, cfg);
    CHECK(a.state == b.state);
    CHECK(to_jsonl(Json::object(), a.trace) == to_jsonl(Json::object(), b.trace));
    CHECK(to_json(a.best) == to_json(b.best));
}

TEST_CASE("derived points are always valid") {
    const SearchSpace s = small_space();
    Rng rng = make_rng(41, "edd_derive");
    for (int t = 0; t < 1000; ++t) {
        const EddSkeleton sk{uniform_int(rng, 0, 1) ? "a" : "b", {8, 16, 32}, {}};
        const RelaxedState st = random_state(s, sk, rng, 10.0);
        const DesignPoint p = derive_discrete(st, s, sk);
        CHECK(validate(s, p));
        CHECK(p.channels == sk.channels);
    }
}

TEST_CASE("derivation takes the argmax and rounds pf half up") {
    const SearchSpace s = small_space();
    const EddSkeleton sk = small_skeleton();
    RelaxedState st = initial_state(s, sk);
    // block 0: dwconv, block 1: conv1x1, block 2: identity
    st.theta[st.ti(0, 1)] = 3.0;
    st.theta[st.ti(1, 0)] = 0.5;
    st.theta[st.ti(2, 2)] = 1.0;
    st.phi[st.pi(0, 1, 2)] = 1.0;  // 16 bits
    st.phi[st.pi(1, 0, 0)] = 1.0;  // 4 bits
    st.pf_cont[st.ti(0, 1)] = 3.5;
    st.pf_cont[st.ti(1, 0)] = 2.49;
    const DesignPoint p = derive_discrete(st, s, sk);
    CHECK(p.op_choice == std::vector<int>{1, 0, 2});
    CHECK(p.quant_bits[0] == 16);
    CHECK(p.quant_bits[1] == 4);
    CHECK(p.pf[0] == 4);
    CHECK(p.pf[1] == 2);

    // adding a constant to a block's logits changes nothing
    RelaxedState shifted = st;
    for (int k = 0; k < st.m; ++k) shifted.theta[st.ti(0, k)] += 7.25;
    for (int b = 0; b < st.q; ++b) shifted.phi[st.pi(1, 0, b)] -= 3.0;
    CHECK(to_json(derive_discrete(shifted, s, sk)) == to_json(p));
}

TEST_CASE("relaxed loss gradient matches finite differences") {
    const SearchSpace s = small_space();
    const EddSkeleton sk = small_skeleton();
    const PlatformModel plat = tight_platform();
    const ObjectiveSpec obj = objective_for(plat);
    Rng rng = make_rng(42, "edd_fd");
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        const RelaxedState st = random_state(s, sk, rng);
        Rng nz = make_rng(42, "edd_fd_noise", static_cast<std::uint64_t>(t));
        const EddNoise z = draw_noise(s, sk, nz);
        const double tau = 0.5 + 2.0 * uniform01(rng);
        ad::Tape tape;
        const RelaxedLoss L = build_relaxed_loss(st, s, plat, SurrogateParams{}, obj, sk, z, tau, tape);
        std::set<std::string> names;
        for (const auto& [name, id] : tape.variables()) names.insert(name);
        const auto g = ad::grad(tape, L.loss, names);
        // a few coordinates of each family per case
        for (int probe = 0; probe < 6; ++probe) {
            const int i = uniform_int(rng, 0, st.n - 1);
            const int k = uniform_int(rng, 0, st.m - 1);
            const int family = probe % 3;
            std::string name;
            double* slot = nullptr;
            RelaxedState work = st;
            if (family == 0) {
                name = "theta." + std::to_string(i) + "." + std::to_string(k);
                slot = &work.theta[st.ti(i, k)];
            } else if (family == 1) {
                const int b = uniform_int(rng, 0, st.q - 1);
                name = "phi." + std::to_string(i) + "." + std::to_string(k) + "." + std::to_string(b);
                slot = &work.phi[st.pi(i, k, b)];
            } else {
                name = "pf." + std::to_string(i) + "." + std::to_string(k);
                slot = &work.pf_cont[st.ti(i, k)];
            }
            const double x0 = *slot;
            auto f = [&](double x) {
                *slot = x;
                return loss_at(work, s, plat, obj, sk, z, tau);
            };
            const double fd = central_diff(f, x0, 1e-5);
            const double ga = names.count(name) ? g.at(name) : 0.0;
            CHECK_MESSAGE(std::abs(ga - fd) <= 1e-3 * std::max({std::abs(ga), std::abs(fd), 1e-3}),
                          "case " << t << " " << name << " ad=" << ga << " fd=" << fd);
            ++checked;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("beta zero leaves accuracy times performance") {
    const SearchSpace s = small_space();
    const EddSkeleton sk = small_skeleton();
    const PlatformModel plat = tight_platform();
    ObjectiveSpec obj = objective_for(plat);
    obj.beta = 0.0;
    Rng rng = make_rng(43, "edd_beta0");
    for (int t = 0; t < 50; ++t) {
        const RelaxedState st = random_state(s, sk, rng);
        const EddNoise z = draw_noise(s, sk, rng);
        ad::Tape tape;
        const RelaxedLoss L = build_relaxed_loss(st, s, plat, SurrogateParams{}, obj, sk, z, 1.0, tape);
        CHECK(L.penalty.value() == 0.0);
        CHECK(L.loss.value() == L.acc_loss.value() * L.perf_loss.value());
    }
}

TEST_CASE("one block, one op, one width has a closed form") {
    SearchSpace s;
    s.num_blocks = 1;
    s.min_replications = 1;
    s.quant_bits = {8};
    s.channel_choices = {{16}};
    s.input = {8, 8, 8};
    s.bundles.push_back({"c", {conv1x1(1, 4, {8})}, false});
    const EddSkeleton sk{"c", {16}, {}};
    PlatformModel plat = roomy_platform();
    plat.dsp_budget = 2;  // forces an overshoot
    plat.overhead_cycles_per_op = 40;
    const ObjectiveSpec obj = objective_for(plat);
    const SurrogateParams sp;
    RelaxedState st = initial_state(s, sk);
    st.pf_cont[0] = 2.7;
    Rng rng = make_rng(44, "edd_closed");
    const EddNoise z = draw_noise(s, sk, rng);
    ad::Tape tape;
    const RelaxedLoss L = build_relaxed_loss(st, s, plat, sp, obj, sk, z, 0.8, tape);

    const OpCandidate& op = s.bundles[0].ops[0];
    const SlotShape shape{8, 8, 8, 16};
    const double cycles = op_cycles_smooth(op, shape, 8, 2.7, plat);
    const auto r = op_resources_smooth(op, shape, 8, 2.7, plat);
    const double acc = sp.floor + std::exp(-sp.capacity_weight * std::log(1.0 + 8.0 * 16.0) - sp.depth_weight + sp.quant_penalty.at(8));
    const double perf = cycles / (plat.clock_mhz * 1e3);
    const auto sp50 = [](double x) { return std::log1p(std::exp(50.0 * x)) / 50.0; };
    const double expo = sp50((r.dsp - obj.res_ub.dsp) / obj.res_ub.dsp) +
                        sp50((r.bram_kbit - obj.res_ub.bram_kbit) / obj.res_ub.bram_kbit) +
                        sp50((r.lut - obj.res_ub.lut) / obj.res_ub.lut);
    const double pen = obj.beta * std::exp(expo);
    CHECK(L.acc_loss.value() == doctest::Approx(acc).epsilon(1e-12));
    CHECK(L.perf_loss.value() == doctest::Approx(perf).epsilon(1e-12));
    CHECK(L.penalty.value() == doctest::Approx(pen).epsilon(1e-12));
    CHECK(L.loss.value() == doctest::Approx(acc * perf + pen).epsilon(1e-12));
    CHECK(pen > obj.beta);
}

TEST_CASE("penalty sits on its floor well inside the budget") {
    const SearchSpace s = small_space();
    const EddSkeleton sk = small_skeleton();
    const PlatformModel plat = tight_platform();
    const ObjectiveSpec obj = objective_for(plat);
    Rng rng = make_rng(45, "edd_plateau");
    int inside = 0;
    for (int t = 0; t < 500; ++t) {
        const RelaxedState st = random_state(s, sk, rng);
        const EddNoise z = draw_noise(s, sk, rng);
        ad::Tape tape;
        const RelaxedLoss L = build_relaxed_loss(st, s, plat, SurrogateParams{}, obj, sk, z, 1.0, tape);
        const auto& r = L.resources;
        if (r.dsp.value() <= 0.8 * obj.res_ub.dsp && r.bram_kbit.value() <= 0.8 * obj.res_ub.bram_kbit &&
            r.lut.value() <= 0.8 * obj.res_ub.lut) {
            ++inside;
            CHECK(L.penalty.value() >= obj.beta);
            CHECK(L.penalty.value() <= obj.beta * std::pow(obj.penalty_base, 0.01));
        }
    }
    CHECK(inside > 20);
}

TEST_CASE("penalty grows with the parallel factor") {
    const SearchSpace s = small_space();
    const EddSkeleton sk = small_skeleton();
    const PlatformModel plat = tight_platform();
    const ObjectiveSpec obj = objective_for(plat);
    Rng rng = make_rng(46, "edd_mono");
    for (int t = 0; t < 50; ++t) {
        RelaxedState st = random_state(s, sk, rng);
        const EddNoise z = draw_noise(s, sk, rng);
        const int i = uniform_int(rng, 0, st.n - 1);
        const int k = uniform_int(rng, 0, 1);  // conv1x1 or dwconv
        double prev = -1.0;
        for (double pf = 0.0; pf <= 6.0; pf += 0.25) {
            st.pf_cont[st.ti(i, k)] = pf;
            ad::Tape tape;
            const double pen = build_relaxed_loss(st, s, plat, SurrogateParams{}, obj, sk, z, 1.0, tape).penalty.value();
            CHECK(pen >= prev);
            prev = pen;
        }
    }
}

TEST_CASE("state serialization round-trips") {
    const SearchSpace s = small_space();
    Rng rng = make_rng(47, "edd_json");
    const RelaxedState st = random_state(s, small_skeleton(), rng);
    CHECK(relaxed_state_from_json(nlohmann::json::parse(to_json(st).dump())) == st);
    CHECK(validate_state(st, s));
    RelaxedState bad = st;
    bad.theta.pop_back();
    CHECK_FALSE(validate_state(bad, s));
}

TEST_CASE("configuration validation") {
    const SearchSpace s = small_space();
    EddConfig c;
    c.skeleton = small_skeleton();
    CHECK(validate_edd(c, s).valid);
    c.skeleton.channels = {8, 16};
    CHECK_FALSE(validate_edd(c, s).valid);
    c.skeleton = small_skeleton();
    c.skeleton.bundle_id = "zzz";
    CHECK_FALSE(validate_edd(c, s).valid);
    c.skeleton = small_skeleton();
    c.skeleton.channels = {8, 12, 32};
    CHECK_FALSE(validate_edd(c, s).valid);
    c.skeleton = small_skeleton();
    c.lr_pf = -1.0;
    CHECK_FALSE(validate_edd(c, s).valid);
}
