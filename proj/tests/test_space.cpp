// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "support.hpp"

#include "codesign/rng.hpp"

using namespace codesign;
using testing::small_space;

TEST_CASE("validate names the offending channel slot") {
    const SearchSpace s = small_space();
    DesignPoint p = default_point(s);
    p.channels[2] = 12;
    const Verdict v = validate(s, p);
    CHECK_FALSE(v.valid);
    CHECK(v.reason.rfind("channels[2]", 0) == 0);
}

TEST_CASE("default point is valid") {
    const SearchSpace s = small_space();
    CHECK(validate_space(s).valid);
    CHECK(validate(s, default_point(s)).valid);
}

TEST_CASE("validate rejects each out-of-domain field") {
    const SearchSpace s = small_space();
    const DesignPoint base = default_point(s);
    auto expect_fail = [&](auto mutate, const char* prefix) {
        DesignPoint p = base;
        mutate(p);
        const Verdict v = validate(s, p);
        CHECK_FALSE(v.valid);
        CHECK_MESSAGE(v.reason.find(prefix) != std::string::npos, v.reason);
    };
    expect_fail([](DesignPoint& p) { p.bundle_id = "zz"; }, "bundle_id");
    expect_fail([](DesignPoint& p) { p.replications = 4; }, "replications");
    expect_fail([](DesignPoint& p) { p.op_choice[1] = 3; }, "op_choice[1]");
    expect_fail([](DesignPoint& p) { p.quant_bits[0] = 2; }, "quant_bits[0]");
    expect_fail([](DesignPoint& p) { p.pf[2] = 7; }, "pf[2]");
    expect_fail([](DesignPoint& p) { p.pools = {1, 0}; }, "pools");
    expect_fail([](DesignPoint& p) { p.pools = {2}; }, "pool position 2");
    expect_fail([](DesignPoint& p) { p.pf.pop_back(); }, "pf has 2 entries");
}

TEST_CASE("space validation catches malformed spaces") {
    SearchSpace s = small_space();
    s.bundles[1].ops.pop_back();
    CHECK_FALSE(validate_space(s).valid);

    s = small_space();
    s.bundles[0].ops[0].allowed_quant_bits = {8, 4};
    CHECK_FALSE(validate_space(s).valid);

    s = small_space();
    s.bundles[0].ops[1].kernel_size = 4;
    CHECK_FALSE(validate_space(s).valid);

    s = small_space();
    s.pool_positions = {3};
    CHECK_FALSE(validate_space(s).valid);

    s = small_space();
    s.bundles[0].ops[0] = testing::pool2x2();
    s.bundles[0].ops[1] = testing::pool2x2();
    CHECK(validate_space(s).reason.find("downsampling") != std::string::npos);
}

TEST_CASE("sample_uniform round-trips through validate") {
    const SearchSpace s = small_space();
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const DesignPoint p = sample_uniform(s, derive_seed(seed, "space_test"));
        const Verdict v = validate(s, p);
        REQUIRE_MESSAGE(v.valid, v.reason);
    }
}

TEST_CASE("sample_uniform is deterministic and spreads over seeds") {
    const SearchSpace s = small_space();
    CHECK(sample_uniform(s, 42) == sample_uniform(s, 42));
    int collisions = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        if (sample_uniform(s, derive_seed(1, "pair_a", k)) == sample_uniform(s, derive_seed(1, "pair_b", k))) ++collisions;
    }
    CHECK(collisions < 10);
}

TEST_CASE("sample_uniform on a one-choice space returns the unique point") {
    SearchSpace s;
    s.num_blocks = 2;
    s.min_replications = 2;
    s.quant_bits = {8};
    s.channel_choices = {{16}, {16}};
    s.input = {4, 4, 3};
    s.bundles.push_back({"only", {testing::conv1x1(3, 3, {8})}, true});
    REQUIRE(validate_space(s).valid);
    const DesignPoint first = sample_uniform(s, 1);
    for (std::uint64_t seed = 2; seed < 50; ++seed) CHECK(sample_uniform(s, seed) == first);
    CHECK(enumerate(s).size() == 1);
}

TEST_CASE("sample_uniform rejects empty choice lists") {
    SearchSpace s = small_space();
    s.channel_choices[1].clear();
    CHECK_THROWS_AS(sample_uniform(s, 1), std::invalid_argument);
}

TEST_CASE("shapes propagate and pool with floor division") {
    SearchSpace s = small_space();
    s.input = {32, 32, 3};
    s.channel_choices = {{16}, {16}, {16}};
    DesignPoint p = default_point(s);
    for (const auto& sh : shapes(s, p)) {
        CHECK(sh.h == 32);
        CHECK(sh.w == 32);
    }
    CHECK(shapes(s, p)[0].c_in == 3);
    CHECK(shapes(s, p)[1].c_in == 16);

    p.pools = {0, 1};
    CHECK(shapes(s, p)[2].h == 8);
    CHECK(shapes(s, p)[2].w == 8);

    s.input = {5, 5, 3};
    p.pools = {0};
    CHECK(shapes(s, p)[1].h == 2);
    CHECK(shapes(s, p)[1].w == 2);
}

TEST_CASE("shape collapse names the slot") {
    SearchSpace s = small_space();
    s.input = {2, 2, 3};
    DesignPoint p = default_point(s);
    p.pools = {0, 1};
    try {
        (void)shapes(s, p);
        FAIL("expected a ShapeError");
    } catch (const ShapeError& e) {
        CHECK(e.slot() == 1);
    }
    CHECK_FALSE(validate(s, p).valid);
}

TEST_CASE("adding a pool never increases downstream spatial size") {
    const SearchSpace s = small_space();
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        DesignPoint p = sample_uniform(s, derive_seed(seed, "mono"));
        const auto before = shapes(s, p);
        for (int pos : s.pool_positions) {
            if (pos >= p.replications || std::find(p.pools.begin(), p.pools.end(), pos) != p.pools.end()) continue;
            DesignPoint q = p;
            q.pools.push_back(pos);
            std::sort(q.pools.begin(), q.pools.end());
            if (!validate(s, q)) continue;
            const auto after = shapes(s, q);
            for (std::size_t i = 0; i < before.size(); ++i) {
                CHECK(after[i].h <= before[i].h);
                CHECK(after[i].w <= before[i].w);
            }
        }
    }
}

TEST_CASE("op choice never changes shapes") {
    const SearchSpace s = small_space();
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const DesignPoint p = sample_uniform(s, derive_seed(seed, "subst"));
        const auto ref = shapes(s, p);
        Rng rng = make_rng(seed, "subst_ops");
        DesignPoint q = p;
        for (int& m : q.op_choice) m = static_cast<int>(uniform_index(rng, 3));
        CHECK(shapes(s, q) == ref);
    }
}

TEST_CASE("repair brings knobs back into the op's domain") {
    SearchSpace s = small_space();
    s.bundles[0].ops[1] = testing::dwconv(3, 1, 2, {8, 16});
    DesignPoint p = default_point(s);
    p.op_choice[0] = 1;
    p.quant_bits[0] = 4;
    p.pf[0] = 6;
    p.replications = 2;
    p.op_choice.pop_back();
    p.channels.pop_back();
    p.quant_bits.pop_back();
    p.pf.pop_back();
    p.pools = {0, 1};
    repair(s, p);
    CHECK(p.quant_bits[0] == 8);
    CHECK(p.pf[0] == 2);
    CHECK(p.pools == std::vector<int>{0, 1});
    p.replications = 1;
    p.op_choice.pop_back();
    p.channels.pop_back();
    p.quant_bits.pop_back();
    p.pf.pop_back();
    repair(s, p);
    CHECK(p.pools == std::vector<int>{0});
    CHECK(validate(s, p).valid);
}

TEST_CASE("enumerate matches an independent count and contains only valid, distinct points") {
    SearchSpace s;
    s.num_blocks = 2;
    s.min_replications = 1;
    s.quant_bits = {8, 16};
    s.channel_choices = {{4, 8}, {4, 8}};
    s.pool_positions = {0};
    s.input = {4, 4, 2};
    s.bundles.push_back({"x", {testing::conv1x1(0, 1, {8, 16}), testing::identity(0, 0, {8, 16})}, true});
    REQUIRE(validate_space(s).valid);
    // per slot: conv (2 ch x 2 q x 2 pf) + identity (2 ch x 2 q x 1 pf) = 12
    // n=1: 12 x 2 pool subsets; n=2: 144 x 2
    const auto pts = enumerate(s);
    CHECK(pts.size() == 12 * 2 + 144 * 2);
    std::set<std::string> seen;
    for (const auto& p : pts) {
        CHECK(validate(s, p).valid);
        std::string key = p.bundle_id + std::to_string(p.replications);
        for (std::size_t i = 0; i < p.op_choice.size(); ++i)
            key += "|" + std::to_string(p.op_choice[i]) + "," + std::to_string(p.channels[i]) + "," +
                   std::to_string(p.quant_bits[i]) + "," + std::to_string(p.pf[i]);
        for (int pos : p.pools) key += "p" + std::to_string(pos);
        seen.insert(key);
    }
    CHECK(seen.size() == pts.size());
    CHECK_THROWS_AS(enumerate(s, 10), std::length_error);
}

TEST_CASE("round half up") {
    CHECK(round_half_up(3.5) == 4);
    CHECK(round_half_up(2.5) == 3);
    CHECK(round_half_up(2.49) == 2);
    CHECK(round_half_up(-0.5) == 0);
}
