// SPDX-License-Identifier: Apache-2.0
//
// Analytical latency and resource model of the template accelerator.
//
// Every op runs on an IP with 2^pf multipliers; each multiplier packs 16/q
// q-bit MACs per cycle. An op costs max(compute, memory) cycles (roofline,
// with input/output/weight traffic overlapped against compute) plus a fixed
// per-op overhead. The smooth variant drops the ceilings and replaces the
// max by a log-sum-exp so that it can be differentiated in pf.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "codesign/autodiff.hpp"
#include "codesign/space.hpp"

namespace codesign {

enum class AccelMode { Recursive, Pipelined };

struct PlatformModel {
    double clock_mhz = 200.0;
    std::int64_t dsp_budget = 360;
    std::int64_t bram_budget_kbit = 4320;
    std::int64_t lut_budget = 70560;
    double bw_bytes_per_cycle = 16.0;
    std::map<int, double> dsp_per_lane{{4, 0.25}, {8, 0.5}, {16, 1.0}};
    double lut_per_lane = 60.0;
    std::int64_t overhead_cycles_per_op = 0;
    AccelMode accel_mode = AccelMode::Recursive;
    double smooth_sharpness = 2.0;      // s in smooth_max, in cycles
    std::int64_t tile_buffer_kbit = 512;  // on-chip activation buffer for the tiler
    double crosscheck_tolerance = 0.05;
};

Verdict validate_platform(const PlatformModel& platform, const SearchSpace& space);

enum class Bound { Compute, Memory };

struct Resources {
    double dsp = 0.0;
    double bram_kbit = 0.0;
    double lut = 0.0;

    friend bool operator==(const Resources&, const Resources&) = default;
};

struct OpCycles {
    std::int64_t cycles = 0;
    std::int64_t compute_cycles = 0;
    std::int64_t memory_cycles = 0;
    Bound bound = Bound::Compute;
};

struct PerfReport {
    std::vector<std::int64_t> per_op_cycles;
    std::vector<Bound> bound_kind;
    std::int64_t total_cycles = 0;
    double latency_ms = 0.0;
    double throughput_fps = 0.0;  // +inf when every op is free
    Resources resources;
};

inline int lane_pack(int q) { return 16 / q; }

int mbconv_internal_channels(const OpCandidate& op, int c_in);

std::int64_t op_macs(const OpCandidate& op, const SlotShape& shape);
std::int64_t op_weight_count(const OpCandidate& op, const SlotShape& shape);
// Input plus output feature-map elements; zero-MAC ops move nothing.
std::int64_t op_activation_count(const OpCandidate& op, const SlotShape& shape);
// (activations + weights) * q
std::int64_t op_bits_moved(const OpCandidate& op, const SlotShape& shape, int q);

OpCycles op_cycles_discrete(const OpCandidate& op, const SlotShape& shape, int q, int pf, const PlatformModel& platform);

Resources op_resources(const OpCandidate& op, const SlotShape& shape, int q, double pf, const PlatformModel& platform);

PerfReport evaluate(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform);

// Weighted normalized usage, used as the resource axis of Pareto selection.
struct ResourceWeights {
    double dsp = 0.5;
    double bram = 0.3;
    double lut = 0.2;
};
double resource_scalar(const Resources& r, const PlatformModel& platform, const ResourceWeights& w = {});

// Compute term MACs / (2^pf * pack(q)) with pf real.
template <class S>
S compute_cycles_real(std::int64_t macs, int q, const S& pf) {
    using std::exp;
    const double scale = static_cast<double>(macs) / lane_pack(q);
    return exp(pf * -std::numbers::ln2) * scale;
}

// Smooth, pf-differentiable op latency. Satisfies
//   discrete - (1 + s ln2) <= smooth <= discrete + s ln2.
template <class S>
S op_cycles_smooth(const OpCandidate& op, const SlotShape& shape, int q, const S& pf, const PlatformModel& platform) {
    const double overhead = static_cast<double>(platform.overhead_cycles_per_op);
    const std::int64_t macs = op_macs(op, shape);
    if (macs == 0) return constant_like(pf, overhead);
    const double memory = static_cast<double>(op_bits_moved(op, shape, q)) / (8.0 * platform.bw_bytes_per_cycle);
    return smooth_max(compute_cycles_real(macs, q, pf), memory, platform.smooth_sharpness) + overhead;
}

// Resources with pf real, for the relaxed objective. Linear in 2^pf.
template <class S>
struct SmoothResources {
    S dsp;
    S bram_kbit;
    S lut;
};

template <class S>
SmoothResources<S> op_resources_smooth(const OpCandidate& op, const SlotShape& shape, int q, const S& pf,
                                       const PlatformModel& platform) {
    using std::exp;
    if (op.zero_mac()) {
        const S zero = constant_like(pf, 0.0);
        return {zero, zero, zero};
    }
    const Resources unit = op_resources(op, shape, q, 0.0, platform);
    const S lanes = exp(pf * std::numbers::ln2);
    return {lanes * unit.dsp, constant_like(pf, unit.bram_kbit), lanes * unit.lut};
}

}  // namespace codesign
