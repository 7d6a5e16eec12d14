// SPDX-License-Identifier: Apache-2.0
//
// Seeded (op, shape, q, pf) configurations for comparing the analytical model
// with the tile simulator.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "codesign/cycle_oracle.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/rng.hpp"

namespace testing {

struct OracleCase {
    codesign::OpCandidate op;
    codesign::SlotShape shape;
    int q = 8;
    int pf = 0;
    codesign::PlatformModel platform;
    codesign::TileSchedule schedule;
};

inline codesign::OpCandidate random_op(codesign::Rng& rng) {
    using namespace codesign;
    OpCandidate op;
    op.allowed_quant_bits = {4, 8, 16};
    op.pf_min = 0;
    op.pf_max = 8;
    switch (uniform_int(rng, 0, 2)) {
    case 0: op.kind = OpKind::Conv1x1; break;
    case 1:
        op.kind = OpKind::DwConvK;
        op.kernel_size = std::array{3, 5, 7}[uniform_index(rng, 3)];
        break;
    default:
        op.kind = OpKind::MBConv;
        op.kernel_size = std::array{3, 5}[uniform_index(rng, 2)];
        op.expansion_ratio = std::array{1.0, 2.0, 4.0, 6.0}[uniform_index(rng, 4)];
        break;
    }
    return op;
}

// Divisible grid: power-of-two shapes and tiles that split them evenly, and
// only configurations whose every tile has integral compute and io cycles.
inline std::vector<OracleCase> divisible_cases(std::uint64_t seed, std::size_t count) {
    using namespace codesign;
    Rng rng = make_rng(seed, "oracle_divisible");
    std::vector<OracleCase> out;
    while (out.size() < count) {
        OracleCase c;
        c.op = random_op(rng);
        const int hw = 1 << uniform_int(rng, 2, 5);
        c.shape = {hw, hw, 1 << uniform_int(rng, 2, 6), 1 << uniform_int(rng, 2, 6)};
        c.q = std::array{4, 8, 16}[uniform_index(rng, 3)];
        c.pf = uniform_int(rng, 0, 5);
        c.platform.bw_bytes_per_cycle = std::exp2(uniform_int(rng, 0, 4));
        c.platform.overhead_cycles_per_op = uniform_int(rng, 0, 64);
        const int splits_h = 1 << uniform_int(rng, 0, 2);
        const int splits_w = 1 << uniform_int(rng, 0, 2);
        const int channels = tiled_channels(c.op, c.shape);
        const int splits_c = std::min(channels, 1 << uniform_int(rng, 0, 2));
        c.schedule = make_schedule(hw / splits_h, hw / splits_w, channels / splits_c, c.q, c.pf);
        if (!schedule_is_exact(c.op, c.shape, c.q, c.schedule, c.platform)) continue;
        out.push_back(c);
    }
    return out;
}

// Arbitrary shapes (odd sizes, 7x7 maps, large pf) under the default
// buffer-bounded schedule. `tiny_buffers` adds 8 kbit buffers, which cut a
// map into thousands of tiles.
inline std::vector<OracleCase> random_cases(std::uint64_t seed, std::size_t count, bool tiny_buffers = false) {
    using namespace codesign;
    Rng rng = make_rng(seed, "oracle_random");
    std::vector<OracleCase> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        OracleCase c;
        c.op = random_op(rng);
        const int h = uniform_int(rng, 1, 4) == 1 ? 7 : uniform_int(rng, 1, 40);
        const int w = uniform_int(rng, 1, 4) == 1 ? 7 : uniform_int(rng, 1, 40);
        c.shape = {h, w, uniform_int(rng, 1, 96), uniform_int(rng, 1, 96)};
        c.q = std::array{4, 8, 16}[uniform_index(rng, 3)];
        c.pf = uniform_int(rng, 0, 4) == 0 ? 5 : uniform_int(rng, 0, 8);
        c.platform.bw_bytes_per_cycle = std::array{1.0, 3.0, 8.0, 16.0, 64.0}[uniform_index(rng, 5)];
        c.platform.overhead_cycles_per_op = uniform_int(rng, 0, 200);
        c.platform.tile_buffer_kbit = tiny_buffers ? std::array{8, 64, 512}[uniform_index(rng, 3)]
                                                   : std::array{64, 512}[uniform_index(rng, 2)];
        c.schedule = default_schedule(c.op, c.shape, c.q, c.pf, c.platform);
        out.push_back(c);
    }
    return out;
}

}  // namespace testing
