// SPDX-License-Identifier: Apache-2.0
#include "codesign/cycle_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace codesign {

namespace {

struct TileTraffic {
    // Traffic of one tile as a numerator over the op-wide denominator
    // H*W*channel_axis, in elements. Keeps proportional shares exact.
    std::int64_t activation_num = 0;
    std::int64_t weight_num = 0;
};

int mbconv_width(const OpCandidate& op, int c_in) {
    return std::max(1, static_cast<int>(std::lround(op.expansion_ratio * c_in)));
}

// MACs contributed by one output element of the tiled axis.
std::int64_t macs_per_element(const OpCandidate& op, const SlotShape& s) {
    const std::int64_t k2 = std::int64_t{op.kernel_size} * op.kernel_size;
    switch (op.kind) {
    case OpKind::Conv1x1: return s.c_in;
    case OpKind::DwConvK: return k2;
    case OpKind::MBConv: {
        const std::int64_t e = mbconv_width(op, s.c_in);
        return s.c_in * e + e * k2 + e * s.c_out;  // expand, depthwise, project for one pixel
    }
    default: return 0;
    }
}

TileTraffic tile_traffic(const OpCandidate& op, const SlotShape& s, std::int64_t px, std::int64_t tc) {
    const std::int64_t hw = std::int64_t{s.h} * s.w;
    const std::int64_t k2 = std::int64_t{op.kernel_size} * op.kernel_size;
    switch (op.kind) {
    case OpKind::Conv1x1: {
        const std::int64_t denom = hw * s.c_out;
        return {px * s.c_in * tc * hw + px * tc * denom, std::int64_t{s.c_in} * tc * px * s.c_out};
    }
    case OpKind::DwConvK: {
        const std::int64_t denom = hw * s.c_in;
        return {2 * px * tc * denom, k2 * tc * px * s.c_in};
    }
    case OpKind::MBConv: {
        const std::int64_t e = mbconv_width(op, s.c_in);
        const std::int64_t weights = s.c_in * e + e * k2 + e * s.c_out;
        return {px * (s.c_in + s.c_out) * hw, weights * px};
    }
    default: return {};
    }
}

std::int64_t traffic_denominator(const OpCandidate& op, const SlotShape& s) {
    return std::int64_t{s.h} * s.w * tiled_channels(op, s);
}

// ceil(bits / (8 bw)) where bits = num / denom.
std::int64_t io_cycles(std::int64_t num_bits, std::int64_t denom, double bw) {
    if (num_bits == 0) return 0;
    const double per_cycle = 8.0 * bw;
    if (per_cycle == std::floor(per_cycle)) {
        const std::int64_t d = denom * static_cast<std::int64_t>(per_cycle);
        return (num_bits + d - 1) / d;
    }
    const double x = static_cast<double>(num_bits) / (static_cast<double>(denom) * per_cycle);
    return static_cast<std::int64_t>(std::ceil(x - 1e-12 * x));
}

bool io_exact(std::int64_t num_bits, std::int64_t denom, double bw) {
    const double per_cycle = 8.0 * bw;
    if (per_cycle == std::floor(per_cycle)) return num_bits % (denom * static_cast<std::int64_t>(per_cycle)) == 0;
    const double x = static_cast<double>(num_bits) / (static_cast<double>(denom) * per_cycle);
    return x == std::floor(x);
}

std::int64_t footprint_bits(const OpCandidate& op, const SlotShape& s, int th, int tw, int tc, int q) {
    const std::int64_t px = std::int64_t{th} * tw;
    switch (op.kind) {
    case OpKind::Conv1x1: return (px * s.c_in + px * tc) * q;
    case OpKind::DwConvK: return 2 * px * tc * q;
    case OpKind::MBConv: return px * (s.c_in + s.c_out) * q;
    default: return 0;
    }
}

}  // namespace

int tiled_channels(const OpCandidate& op, const SlotShape& shape) {
    switch (op.kind) {
    case OpKind::Conv1x1: return shape.c_out;
    case OpKind::DwConvK: return shape.c_in;
    default: return 1;
    }
}

TileSchedule make_schedule(int tile_h, int tile_w, int tile_c, int q, int pf) {
    return {tile_h, tile_w, tile_c, (std::int64_t{1} << pf) * (16 / q)};
}

TileSchedule default_schedule(const OpCandidate& op, const SlotShape& shape, int q, int pf, const PlatformModel& platform) {
    const std::int64_t buffer = platform.tile_buffer_kbit * 1024;
    int th = shape.h;
    int tw = shape.w;
    int tc = tiled_channels(op, shape);
    while (footprint_bits(op, shape, th, tw, tc, q) > buffer) {
        int* largest = &th;
        if (tw > *largest) largest = &tw;
        if (tc > *largest) largest = &tc;
        if (*largest == 1) break;
        *largest = (*largest + 1) / 2;
    }
    return make_schedule(th, tw, tc, q, pf);
}

SimResult simulate_op(const OpCandidate& op, const SlotShape& shape, int q, const TileSchedule& schedule,
                      const PlatformModel& platform, bool record_events) {
    if (schedule.lanes < 1 || schedule.tile_h < 1 || schedule.tile_w < 1 || schedule.tile_c < 1)
        throw std::invalid_argument("simulate_op: tile dimensions and lanes must be >= 1");
    SimResult r;
    r.cycles = platform.overhead_cycles_per_op;
    if (op.zero_mac()) return r;

    const int channels = tiled_channels(op, shape);
    const int th = std::min(schedule.tile_h, shape.h);
    const int tw = std::min(schedule.tile_w, shape.w);
    const int tcap = std::min(schedule.tile_c, channels);
    const std::int64_t denom = traffic_denominator(op, shape);
    const std::int64_t per_element = macs_per_element(op, shape);
    std::int64_t act_total = 0;
    std::int64_t weight_total = 0;

    for (int c0 = 0; c0 < channels; c0 += tcap) {
        const int tc = std::min(tcap, channels - c0);
        for (int h0 = 0; h0 < shape.h; h0 += th) {
            const int eh = std::min(th, shape.h - h0);
            for (int w0 = 0; w0 < shape.w; w0 += tw) {
                const int ew = std::min(tw, shape.w - w0);
                std::int64_t tile_macs = 0;
                for (int h = 0; h < eh; ++h)
                    for (int w = 0; w < ew; ++w)
                        for (int c = 0; c < tc; ++c) tile_macs += per_element;
                const TileTraffic t = tile_traffic(op, shape, std::int64_t{eh} * ew, tc);
                const std::int64_t compute = (tile_macs + schedule.lanes - 1) / schedule.lanes;
                const std::int64_t io = io_cycles((t.activation_num + t.weight_num) * q, denom, platform.bw_bytes_per_cycle);
                r.cycles += std::max(compute, io);
                r.macs_executed += tile_macs;
                act_total += t.activation_num;
                weight_total += t.weight_num;
                ++r.tiles;
                if (record_events) r.events.push_back({h0, w0, c0, eh, ew, tc, tile_macs, compute, io});
            }
        }
    }
    const double denom_bytes = static_cast<double>(denom) * 8.0;
    r.weight_bytes_moved = static_cast<double>(weight_total * q) / denom_bytes;
    r.bytes_moved = static_cast<double>((act_total + weight_total) * q) / denom_bytes;
    return r;
}

bool schedule_is_exact(const OpCandidate& op, const SlotShape& shape, int q, const TileSchedule& schedule,
                       const PlatformModel& platform) {
    if (op.zero_mac()) return true;
    const int channels = tiled_channels(op, shape);
    const int th = std::min(schedule.tile_h, shape.h);
    const int tw = std::min(schedule.tile_w, shape.w);
    const int tc = std::min(schedule.tile_c, channels);
    if (shape.h % th != 0 || shape.w % tw != 0 || channels % tc != 0) return false;
    const std::int64_t tile_macs = std::int64_t{th} * tw * tc * macs_per_element(op, shape);
    if (tile_macs % schedule.lanes != 0) return false;
    const TileTraffic t = tile_traffic(op, shape, std::int64_t{th} * tw, tc);
    return io_exact((t.activation_num + t.weight_num) * q, traffic_denominator(op, shape), platform.bw_bytes_per_cycle);
}

namespace {

TileSchedule schedule_for(SchedulePolicy policy, const OpCandidate& op, const SlotShape& s, int q, int pf,
                          const PlatformModel& platform) {
    if (policy == SchedulePolicy::WholeMap) return make_schedule(s.h, s.w, tiled_channels(op, s), q, pf);
    return default_schedule(op, s, q, pf, platform);
}

}  // namespace

CrosscheckReport crosscheck(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform,
                            SchedulePolicy policy) {
    const Bundle& bundle = space.bundle(point.bundle_id);
    const auto slot_shapes = shapes(space, point);
    CrosscheckReport report;
    for (std::size_t i = 0; i < slot_shapes.size(); ++i) {
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(point.op_choice[i])];
        const int q = point.quant_bits[i];
        const int pf = point.pf[i];
        CrosscheckEntry e;
        e.slot = static_cast<int>(i);
        e.analytical = op_cycles_discrete(op, slot_shapes[i], q, pf, platform).cycles;
        e.simulated = simulate_op(op, slot_shapes[i], q, schedule_for(policy, op, slot_shapes[i], q, pf, platform), platform).cycles;
        if (e.simulated > 0) {
            e.relative_error = std::abs(static_cast<double>(e.analytical - e.simulated)) / static_cast<double>(e.simulated);
        } else {
            e.relative_error = e.analytical == 0 ? 0.0 : 1.0;
        }
        e.flagged = e.relative_error > platform.crosscheck_tolerance;
        report.any_flagged = report.any_flagged || e.flagged;
        report.analytical_total += e.analytical;
        report.simulated_total += e.simulated;
        report.ops.push_back(e);
    }
    return report;
}

void write_tile_trace_csv(std::ostream& os, const DesignPoint& point, const SearchSpace& space,
                          const PlatformModel& platform, SchedulePolicy policy) {
    const Bundle& bundle = space.bundle(point.bundle_id);
    const auto slot_shapes = shapes(space, point);
    os << "slot,op,tile,h0,w0,c0,th,tw,tc,macs,compute_cycles,io_cycles,tile_cycles\n";
    for (std::size_t i = 0; i < slot_shapes.size(); ++i) {
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(point.op_choice[i])];
        const int q = point.quant_bits[i];
        const auto sched = schedule_for(policy, op, slot_shapes[i], q, point.pf[i], platform);
        const SimResult r = simulate_op(op, slot_shapes[i], q, sched, platform, true);
        for (std::size_t t = 0; t < r.events.size(); ++t) {
            const TileEvent& e = r.events[t];
            os << i << ',' << op.label() << ',' << t << ',' << e.h0 << ',' << e.w0 << ',' << e.c0 << ',' << e.th << ','
               << e.tw << ',' << e.tc << ',' << e.macs << ',' << e.compute_cycles << ',' << e.io_cycles << ','
               << std::max(e.compute_cycles, e.io_cycles) << '\n';
        }
    }
}

}  // namespace codesign
