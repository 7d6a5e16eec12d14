// SPDX-License-Identifier: Apache-2.0
//
// Joint architecture / implementation design space and concrete design points.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codesign {

enum class OpKind { Conv1x1, DwConvK, MBConv, Pool2x2, Identity };

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

struct OpCandidate {
    OpKind kind = OpKind::Identity;
    int kernel_size = 1;
    double expansion_ratio = 1.0;
    std::vector<int> allowed_quant_bits;  // strictly increasing
    int pf_min = 0;
    int pf_max = 0;

    bool zero_mac() const { return kind == OpKind::Pool2x2 || kind == OpKind::Identity; }
    std::string label() const;

    friend bool operator==(const OpCandidate&, const OpCandidate&) = default;
};

// A bundle's op list doubles as the per-slot candidate list. The loader
// appends an Identity candidate so a slot can be switched off.
struct Bundle {
    std::string id;
    std::vector<OpCandidate> ops;
    bool downsample_capable = true;
};

struct FeatureShape {
    int h = 1;
    int w = 1;
    int c = 1;
};

struct SlotShape {
    int h = 1;
    int w = 1;
    int c_in = 1;
    int c_out = 1;

    friend bool operator==(const SlotShape&, const SlotShape&) = default;
};

struct SearchSpace {
    std::vector<Bundle> bundles;
    int num_blocks = 1;        // N
    int min_replications = 1;  // replications range is [min_replications, N]
    std::vector<int> quant_bits;                    // Q global choices, increasing
    std::vector<std::vector<int>> channel_choices;  // one list per slot
    std::vector<int> pool_positions;                // allowed, increasing
    FeatureShape input{32, 32, 3};
    int num_classes = 10;

    int candidates_per_block() const;  // M
    int quant_choices() const { return static_cast<int>(quant_bits.size()); }  // Q
    const Bundle& bundle(std::string_view id) const;
    int bundle_index(std::string_view id) const;  // -1 when absent
};

struct DesignPoint {
    std::string bundle_id;
    int replications = 1;
    std::vector<int> op_choice;   // per active slot, index into bundle ops
    std::vector<int> channels;    // per active slot
    std::vector<int> pools;       // sorted positions after which H, W halve
    std::vector<int> quant_bits;  // per active slot
    std::vector<int> pf;          // per active slot

    friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

struct Verdict {
    bool valid = true;
    std::string reason;

    static Verdict ok() { return {}; }
    static Verdict fail(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return valid; }
};

class ShapeError : public std::runtime_error {
public:
    ShapeError(int slot, const std::string& what) : std::runtime_error(what), slot_(slot) {}
    int slot() const { return slot_; }

private:
    int slot_;
};

Verdict validate_space(const SearchSpace& space);
Verdict validate(const SearchSpace& space, const DesignPoint& point);

// Per-slot shapes. Pool position p halves H and W (floor) after slot p.
std::vector<SlotShape> shapes(const SearchSpace& space, const DesignPoint& point);

// Bundle 0, full depth, first op, first channel choice, no pools, widest
// quantization and the smallest parallel factor.
DesignPoint default_point(const SearchSpace& space);

DesignPoint sample_uniform(const SearchSpace& space, std::uint64_t seed);

// Brings implementation knobs back inside the chosen op's domain after an
// op_choice change: q snaps to the nearest allowed width, pf is clamped.
// Also drops pool positions >= replications and, if the map would collapse,
// the largest pool positions until it does not.
void repair(const SearchSpace& space, DesignPoint& point);

// Every valid point of a small space in a fixed order. Throws when the count
// would exceed `limit`.
std::vector<DesignPoint> enumerate(const SearchSpace& space, std::size_t limit = 1'000'000);

int round_half_up(double x);

}  // namespace codesign
