// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "doctest.h"
#include "oracle_cases.hpp"
#include "support.hpp"

using namespace codesign;
using namespace testing;

TEST_CASE("whole-map conv tile reproduces the analytical example") {
    const PlatformModel p = roomy_platform();
    const OpCandidate op = conv1x1();
    const SlotShape sh{8, 8, 16, 16};
    const SimResult r = simulate_op(op, sh, 8, make_schedule(8, 8, 16, 8, 4), p);
    CHECK(r.cycles == 512);
    CHECK(r.macs_executed == 16384);
    CHECK(r.tiles == 1);
}

TEST_CASE("zero-MAC ops cost the overhead only") {
    PlatformModel p = roomy_platform();
    p.overhead_cycles_per_op = 25;
    const SimResult r = simulate_op(identity(), {8, 8, 4, 4}, 8, make_schedule(2, 2, 1, 8, 0), p);
    CHECK(r.cycles == 25);
    CHECK(r.macs_executed == 0);
    CHECK(r.bytes_moved == 0.0);
}

TEST_CASE("half tiles and a full tile agree when lanes divide") {
    const PlatformModel p = roomy_platform();
    const SlotShape sh{8, 8, 16, 16};
    const auto full = simulate_op(conv1x1(), sh, 8, make_schedule(8, 8, 16, 8, 4), p);
    const auto halves = simulate_op(conv1x1(), sh, 8, make_schedule(4, 8, 16, 8, 4), p);
    CHECK(halves.tiles == 2);
    CHECK(full.cycles == halves.cycles);
}

TEST_CASE("oversized tiles are clipped to the shape") {
    const PlatformModel p = roomy_platform();
    const auto r = simulate_op(dwconv(3), {5, 5, 3, 3}, 8, make_schedule(100, 100, 100, 8, 0), p);
    CHECK(r.tiles == 1);
    CHECK(r.macs_executed == op_macs(dwconv(3), {5, 5, 3, 3}));
    CHECK_THROWS_AS(simulate_op(dwconv(3), {5, 5, 3, 3}, 8, make_schedule(0, 1, 1, 8, 0), p), std::invalid_argument);
}

TEST_CASE("MAC and weight conservation across schedules") {
    for (const auto& c : random_cases(21, 300)) {
        const SimResult a = simulate_op(c.op, c.shape, c.q, c.schedule, c.platform);
        const SimResult b = simulate_op(c.op, c.shape, c.q, make_schedule(1, 1, 1, c.q, c.pf), c.platform);
        CHECK(a.macs_executed == op_macs(c.op, c.shape));
        CHECK(b.macs_executed == op_macs(c.op, c.shape));
        CHECK(a.weight_bytes_moved == doctest::Approx(b.weight_bytes_moved).epsilon(1e-12));
        CHECK(a.bytes_moved == doctest::Approx(static_cast<double>(op_bits_moved(c.op, c.shape, c.q)) / 8.0).epsilon(1e-12));
    }
}

TEST_CASE("divisible grid: analytical equals simulated exactly") {
    const auto cases = divisible_cases(2024, 250);
    for (const auto& c : cases) {
        const auto analytical = op_cycles_discrete(c.op, c.shape, c.q, c.pf, c.platform).cycles;
        const auto simulated = simulate_op(c.op, c.shape, c.q, c.schedule, c.platform).cycles;
        CHECK_MESSAGE(analytical == simulated, c.op.label() << " " << c.shape.h << "x" << c.shape.w << "x" << c.shape.c_in
                                                            << "->" << c.shape.c_out << " q" << c.q << " pf" << c.pf);
    }
}

TEST_CASE("arbitrary configurations stay within five percent") {
    for (const auto& c : random_cases(7, 1000)) {
        const double a = static_cast<double>(op_cycles_discrete(c.op, c.shape, c.q, c.pf, c.platform).cycles);
        const double s = static_cast<double>(simulate_op(c.op, c.shape, c.q, c.schedule, c.platform).cycles);
        CHECK(std::abs(a - s) / s <= 0.05);
        // the simulator can only lose to ceilings, never beat the model
        CHECK(s >= a);
    }
}

TEST_CASE("the simulator exceeds the model by at most one cycle per tile") {
    for (const auto& c : random_cases(8, 1000, true)) {
        const auto a = op_cycles_discrete(c.op, c.shape, c.q, c.pf, c.platform).cycles;
        const SimResult r = simulate_op(c.op, c.shape, c.q, c.schedule, c.platform);
        CHECK(r.cycles >= a);
        CHECK(r.cycles - a <= r.tiles);
    }
}

TEST_CASE("crosscheck of an identity-only network returns the overhead sum") {
    SearchSpace s = small_space();
    PlatformModel p = roomy_platform();
    p.overhead_cycles_per_op = 40;
    DesignPoint pt = default_point(s);
    pt.op_choice = {2, 2, 2};
    for (auto policy : {SchedulePolicy::LargestFit, SchedulePolicy::WholeMap}) {
        const auto r = crosscheck(pt, s, p, policy);
        CHECK(r.analytical_total == 120);
        CHECK(r.simulated_total == 120);
        CHECK_FALSE(r.any_flagged);
    }
}

TEST_CASE("crosscheck flags errors above the tolerance") {
    SearchSpace s = small_space();
    s.input = {7, 7, 5};
    s.channel_choices = {{9}, {9}, {9}};
    PlatformModel p = roomy_platform();
    p.tile_buffer_kbit = 1;
    p.crosscheck_tolerance = 0.0;
    DesignPoint pt = default_point(s);
    pt.pf = {5, 5, 5};
    const auto r = crosscheck(pt, s, p);
    CHECK(r.any_flagged);
    p.crosscheck_tolerance = 1.0;
    CHECK_FALSE(crosscheck(pt, s, p).any_flagged);
}

TEST_CASE("simulation is deterministic and the tile trace lists every tile") {
    const SearchSpace s = small_space();
    const PlatformModel p = roomy_platform();
    DesignPoint pt = default_point(s);
    std::ostringstream a, b;
    write_tile_trace_csv(a, pt, s, p);
    write_tile_trace_csv(b, pt, s, p);
    CHECK(a.str() == b.str());
    std::size_t lines = 0;
    for (char ch : a.str()) lines += ch == '\n';
    std::int64_t tiles = 0;
    const auto sh = shapes(s, pt);
    for (std::size_t i = 0; i < sh.size(); ++i) {
        const auto& op = s.bundles[0].ops[static_cast<std::size_t>(pt.op_choice[i])];
        tiles += simulate_op(op, sh[i], pt.quant_bits[i], default_schedule(op, sh[i], pt.quant_bits[i], pt.pf[i], p), p).tiles;
    }
    CHECK(lines == static_cast<std::size_t>(tiles) + 1);
}
