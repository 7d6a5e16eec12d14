// SPDX-License-Identifier: Apache-2.0
#include "codesign/perf_model.hpp"

#include <algorithm>
#include <limits>

namespace codesign {

Verdict validate_platform(const PlatformModel& p, const SearchSpace& space) {
    if (!(p.clock_mhz > 0.0)) return Verdict::fail("platform.clock_mhz must be > 0");
    if (p.dsp_budget <= 0) return Verdict::fail("platform.dsp_budget must be > 0");
    if (p.bram_budget_kbit <= 0) return Verdict::fail("platform.bram_budget_kbit must be > 0");
    if (p.lut_budget <= 0) return Verdict::fail("platform.lut_budget must be > 0");
    if (!(p.bw_bytes_per_cycle > 0.0)) return Verdict::fail("platform.bw_bytes_per_cycle must be > 0");
    if (p.overhead_cycles_per_op < 0) return Verdict::fail("platform.overhead_cycles_per_op must be >= 0");
    if (!(p.smooth_sharpness > 0.0)) return Verdict::fail("platform.smooth_sharpness must be > 0");
    if (p.tile_buffer_kbit <= 0) return Verdict::fail("platform.tile_buffer_kbit must be > 0");
    if (!(p.lut_per_lane >= 0.0)) return Verdict::fail("platform.lut_per_lane must be >= 0");
    for (int q : space.quant_bits) {
        auto it = p.dsp_per_lane.find(q);
        if (it == p.dsp_per_lane.end())
            return Verdict::fail("platform.dsp_per_lane has no entry for " + std::to_string(q) + "-bit");
        if (!(it->second >= 0.0)) return Verdict::fail("platform.dsp_per_lane entries must be >= 0");
    }
    return Verdict::ok();
}

int mbconv_internal_channels(const OpCandidate& op, int c_in) {
    return std::max(1, static_cast<int>(std::lround(op.expansion_ratio * c_in)));
}

std::int64_t op_macs(const OpCandidate& op, const SlotShape& s) {
    const std::int64_t hw = std::int64_t{s.h} * s.w;
    const std::int64_t k2 = std::int64_t{op.kernel_size} * op.kernel_size;
    switch (op.kind) {
    case OpKind::Conv1x1: return hw * s.c_in * s.c_out;
    case OpKind::DwConvK: return hw * s.c_in * k2;
    case OpKind::MBConv: {
        const std::int64_t e = mbconv_internal_channels(op, s.c_in);
        return hw * s.c_in * e + hw * e * k2 + hw * e * s.c_out;
    }
    case OpKind::Pool2x2:
    case OpKind::Identity: return 0;
    }
    return 0;
}

std::int64_t op_weight_count(const OpCandidate& op, const SlotShape& s) {
    const std::int64_t k2 = std::int64_t{op.kernel_size} * op.kernel_size;
    switch (op.kind) {
    case OpKind::Conv1x1: return std::int64_t{s.c_in} * s.c_out;
    case OpKind::DwConvK: return s.c_in * k2;
    case OpKind::MBConv: {
        const std::int64_t e = mbconv_internal_channels(op, s.c_in);
        return s.c_in * e + e * k2 + e * s.c_out;
    }
    case OpKind::Pool2x2:
    case OpKind::Identity: return 0;
    }
    return 0;
}

std::int64_t op_activation_count(const OpCandidate& op, const SlotShape& s) {
    if (op.zero_mac()) return 0;
    const std::int64_t hw = std::int64_t{s.h} * s.w;
    // depthwise keeps its channel count
    const std::int64_t c_out = op.kind == OpKind::DwConvK ? s.c_in : s.c_out;
    return hw * s.c_in + hw * c_out;
}

std::int64_t op_bits_moved(const OpCandidate& op, const SlotShape& s, int q) {
    return (op_activation_count(op, s) + op_weight_count(op, s)) * q;
}

namespace {

void check_impl_knobs(const OpCandidate& op, int q, int pf) {
    if (pf < op.pf_min || pf > op.pf_max)
        throw std::out_of_range("pf " + std::to_string(pf) + " outside [" + std::to_string(op.pf_min) + ", " +
                                std::to_string(op.pf_max) + "] for " + op.label());
    if (std::find(op.allowed_quant_bits.begin(), op.allowed_quant_bits.end(), q) == op.allowed_quant_bits.end())
        throw std::out_of_range("quant bitwidth " + std::to_string(q) + " not allowed for " + op.label());
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// ceil(bits / (8 bw)) with bw real; an integral bw takes the exact path.
std::int64_t memory_cycles(std::int64_t bits, double bw) {
    if (bits == 0) return 0;
    const double per_cycle = 8.0 * bw;
    if (per_cycle == std::floor(per_cycle) && per_cycle < 9.0e15)
        return ceil_div(bits, static_cast<std::int64_t>(per_cycle));
    const double x = static_cast<double>(bits) / per_cycle;
    return static_cast<std::int64_t>(std::ceil(x - 1e-12 * x));
}

}  // namespace

OpCycles op_cycles_discrete(const OpCandidate& op, const SlotShape& shape, int q, int pf, const PlatformModel& platform) {
    check_impl_knobs(op, q, pf);
    OpCycles out;
    const std::int64_t macs = op_macs(op, shape);
    const std::int64_t lanes = (std::int64_t{1} << pf) * lane_pack(q);
    out.compute_cycles = ceil_div(macs, lanes);
    out.memory_cycles = memory_cycles(op_bits_moved(op, shape, q), platform.bw_bytes_per_cycle);
    out.bound = out.memory_cycles > out.compute_cycles ? Bound::Memory : Bound::Compute;
    out.cycles = std::max(out.compute_cycles, out.memory_cycles) + platform.overhead_cycles_per_op;
    return out;
}

Resources op_resources(const OpCandidate& op, const SlotShape& shape, int q, double pf, const PlatformModel& platform) {
    if (op.zero_mac()) return {};
    const double lanes = std::exp2(pf);
    const auto it = platform.dsp_per_lane.find(q);
    if (it == platform.dsp_per_lane.end()) throw std::out_of_range("no dsp_per_lane entry for " + std::to_string(q) + "-bit");
    const double weight_bits = static_cast<double>(op_weight_count(op, shape)) * q;
    // the line buffer feeds the k x k stage; for MBConv that is the expanded tensor
    double linebuffer_bits = 0.0;
    if (op.kernel_size > 1 && (op.kind == OpKind::DwConvK || op.kind == OpKind::MBConv)) {
        const int dw_channels = op.kind == OpKind::MBConv ? mbconv_internal_channels(op, shape.c_in) : shape.c_in;
        linebuffer_bits = static_cast<double>(op.kernel_size - 1) * shape.w * dw_channels * q;
    }
    return {lanes * it->second, (weight_bits + linebuffer_bits) / 1024.0, lanes * platform.lut_per_lane};
}

PerfReport evaluate(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform) {
    const Bundle& bundle = space.bundle(point.bundle_id);
    const std::vector<SlotShape> slot_shapes = shapes(space, point);
    PerfReport r;
    std::int64_t slowest = 0;
    // Recursive: one IP per candidate op, sized by the max over its uses.
    std::map<int, Resources> shared;
    for (std::size_t i = 0; i < slot_shapes.size(); ++i) {
        const int m = point.op_choice[i];
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(m)];
        const OpCycles c = op_cycles_discrete(op, slot_shapes[i], point.quant_bits[i], point.pf[i], platform);
        r.per_op_cycles.push_back(c.cycles);
        r.bound_kind.push_back(c.bound);
        r.total_cycles += c.cycles;
        slowest = std::max(slowest, c.cycles);
        const Resources res = op_resources(op, slot_shapes[i], point.quant_bits[i], point.pf[i], platform);
        if (platform.accel_mode == AccelMode::Pipelined) {
            r.resources.dsp += res.dsp;
            r.resources.bram_kbit += res.bram_kbit;
            r.resources.lut += res.lut;
        } else {
            Resources& s = shared[m];
            s.dsp = std::max(s.dsp, res.dsp);
            s.bram_kbit = std::max(s.bram_kbit, res.bram_kbit);
            s.lut = std::max(s.lut, res.lut);
        }
    }
    for (const auto& [m, s] : shared) {
        r.resources.dsp += s.dsp;
        r.resources.bram_kbit += s.bram_kbit;
        r.resources.lut += s.lut;
    }
    const double cycles_per_ms = platform.clock_mhz * 1e3;
    r.latency_ms = static_cast<double>(r.total_cycles) / cycles_per_ms;
    const double inf = std::numeric_limits<double>::infinity();
    if (platform.accel_mode == AccelMode::Pipelined) {
        r.throughput_fps = slowest > 0 ? platform.clock_mhz * 1e6 / static_cast<double>(slowest) : inf;
    } else {
        r.throughput_fps = r.latency_ms > 0.0 ? 1000.0 / r.latency_ms : inf;
    }
    return r;
}

double resource_scalar(const Resources& r, const PlatformModel& p, const ResourceWeights& w) {
    return w.dsp * r.dsp / static_cast<double>(p.dsp_budget) + w.bram * r.bram_kbit / static_cast<double>(p.bram_budget_kbit) +
           w.lut * r.lut / static_cast<double>(p.lut_budget);
}

}  // namespace codesign
