// SPDX-License-Identifier: Apache-2.0
//
// Tile-level simulator of the template accelerator. It walks the output
// tiles of an op, counts MACs element by element, charges each tile
// max(compute, io) cycles (double-buffered) and sums. It shares no cost
// arithmetic with perf_model and serves as its ground truth.
//
// Tiling: spatial (tile_h x tile_w) plus an optional channel group tile_c.
// Conv1x1 groups output channels, depthwise groups its (shared in/out)
// channels, MBConv is fused and always takes the full channel width.
// Weights stream alongside the pixels they serve, and a Conv1x1 input window
// is charged to its channel groups in proportion, so total traffic never
// depends on the schedule.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "codesign/perf_model.hpp"
#include "codesign/space.hpp"

namespace codesign {

struct TileSchedule {
    int tile_h = 1;
    int tile_w = 1;
    int tile_c = 1;
    std::int64_t lanes = 1;  // 2^pf * pack(q)
};

struct TileEvent {
    int h0, w0, c0;
    int th, tw, tc;
    std::int64_t macs;
    std::int64_t compute_cycles;
    std::int64_t io_cycles;
};

struct SimResult {
    std::int64_t cycles = 0;
    std::int64_t macs_executed = 0;
    double bytes_moved = 0.0;
    double weight_bytes_moved = 0.0;
    std::int64_t tiles = 0;
    std::vector<TileEvent> events;  // filled only when requested
};

// Channel axis the tiler may split: output channels (Conv1x1), depthwise
// channels (DwConvK) or none (1) for fused and zero-MAC ops.
int tiled_channels(const OpCandidate& op, const SlotShape& shape);

TileSchedule make_schedule(int tile_h, int tile_w, int tile_c, int q, int pf);

// Largest tile whose input+output activations fit the on-chip buffer,
// shrinking the largest dimension by halves (rounded up).
TileSchedule default_schedule(const OpCandidate& op, const SlotShape& shape, int q, int pf, const PlatformModel& platform);

SimResult simulate_op(const OpCandidate& op, const SlotShape& shape, int q, const TileSchedule& schedule,
                      const PlatformModel& platform, bool record_events = false);

// True when every tile divides the shape and every tile's compute and io
// cycle counts are exact integers. Under this condition the analytical model
// must agree with the simulation exactly.
bool schedule_is_exact(const OpCandidate& op, const SlotShape& shape, int q, const TileSchedule& schedule,
                       const PlatformModel& platform);

struct CrosscheckEntry {
    int slot = 0;
    std::int64_t analytical = 0;
    std::int64_t simulated = 0;
    double relative_error = 0.0;
    bool flagged = false;
};

struct CrosscheckReport {
    std::vector<CrosscheckEntry> ops;
    std::int64_t analytical_total = 0;
    std::int64_t simulated_total = 0;
    bool any_flagged = false;
};

enum class SchedulePolicy { LargestFit, WholeMap };

CrosscheckReport crosscheck(const DesignPoint& point, const SearchSpace& space, const PlatformModel& platform,
                            SchedulePolicy policy = SchedulePolicy::LargestFit);

// Per-tile event trace of a whole point as CSV.
void write_tile_trace_csv(std::ostream& os, const DesignPoint& point, const SearchSpace& space,
                          const PlatformModel& platform, SchedulePolicy policy = SchedulePolicy::LargestFit);

}  // namespace codesign
