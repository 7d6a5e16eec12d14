// SPDX-License-Identifier: Apache-2.0
#include "codesign/space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "codesign/rng.hpp"

namespace codesign {

std::string_view to_string(OpKind kind) {
    switch (kind) {
    case OpKind::Conv1x1: return "conv1x1";
    case OpKind::DwConvK: return "dwconv";
    case OpKind::MBConv: return "mbconv";
    case OpKind::Pool2x2: return "pool2x2";
    case OpKind::Identity: return "identity";
    }
    return "?";
}

OpKind op_kind_from_string(std::string_view name) {
    for (OpKind k : {OpKind::Conv1x1, OpKind::DwConvK, OpKind::MBConv, OpKind::Pool2x2, OpKind::Identity}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown op kind '" + std::string(name) + "'");
}

std::string OpCandidate::label() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == OpKind::DwConvK || kind == OpKind::MBConv) os << "_k" << kernel_size;
    if (kind == OpKind::MBConv) os << "_e" << expansion_ratio;
    return os.str();
}

int SearchSpace::candidates_per_block() const {
    return bundles.empty() ? 0 : static_cast<int>(bundles.front().ops.size());
}

int SearchSpace::bundle_index(std::string_view id) const {
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (bundles[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

const Bundle& SearchSpace::bundle(std::string_view id) const {
    const int i = bundle_index(id);
    if (i < 0) throw std::out_of_range("unknown bundle '" + std::string(id) + "'");
    return bundles[static_cast<std::size_t>(i)];
}

int round_half_up(double x) {
    return static_cast<int>(std::floor(x + 0.5));
}

namespace {

bool strictly_increasing(const std::vector<int>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>{}) == v.end();
}

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

std::string slot_field(const char* name, std::size_t i) {
    return std::string(name) + "[" + std::to_string(i) + "]";
}

Verdict validate_op(const OpCandidate& op, const std::string& where) {
    if (op.kernel_size != 1 && op.kernel_size != 3 && op.kernel_size != 5 && op.kernel_size != 7)
        return Verdict::fail(where + ": kernel_size must be one of 1, 3, 5, 7");
    if (!(op.expansion_ratio > 0.0)) return Verdict::fail(where + ": expansion_ratio must be > 0");
    if (op.allowed_quant_bits.empty()) return Verdict::fail(where + ": allowed_quant_bits is empty");
    if (!strictly_increasing(op.allowed_quant_bits))
        return Verdict::fail(where + ": allowed_quant_bits must be strictly increasing");
    for (int q : op.allowed_quant_bits) {
        // Lane packing is 16/q, so q has to divide 16.
        if (q <= 0 || 16 % q != 0) return Verdict::fail(where + ": quant bitwidth " + std::to_string(q) + " does not divide 16");
    }
    if (op.pf_min < 0 || op.pf_max < op.pf_min) return Verdict::fail(where + ": pf range must satisfy 0 <= pf_min <= pf_max");
    if (op.pf_max > 24) return Verdict::fail(where + ": pf_max above 24 is not supported");
    return Verdict::ok();
}

}  // namespace

Verdict validate_space(const SearchSpace& space) {
    if (space.num_blocks < 1) return Verdict::fail("num_blocks must be >= 1");
    if (space.min_replications < 1 || space.min_replications > space.num_blocks)
        return Verdict::fail("min_replications must lie in [1, num_blocks]");
    if (space.bundles.empty()) return Verdict::fail("bundles is empty");
    if (space.quant_bits.empty()) return Verdict::fail("quant_bits is empty");
    if (!strictly_increasing(space.quant_bits)) return Verdict::fail("quant_bits must be strictly increasing");
    if (space.input.h < 1 || space.input.w < 1 || space.input.c < 1) return Verdict::fail("input_shape entries must be >= 1");
    if (space.num_classes < 1) return Verdict::fail("num_classes must be >= 1");
    if (static_cast<int>(space.channel_choices.size()) != space.num_blocks)
        return Verdict::fail("channel_choices needs one list per block");
    for (std::size_t i = 0; i < space.channel_choices.size(); ++i) {
        const auto& cc = space.channel_choices[i];
        if (cc.empty()) return Verdict::fail(slot_field("channel_choices", i) + " is empty");
        if (!strictly_increasing(cc)) return Verdict::fail(slot_field("channel_choices", i) + " must be strictly increasing");
        if (cc.front() < 1) return Verdict::fail(slot_field("channel_choices", i) + " entries must be >= 1");
    }
    if (!strictly_increasing(space.pool_positions)) return Verdict::fail("pool_positions must be strictly increasing");
    for (int p : space.pool_positions) {
        if (p < 0 || p >= space.num_blocks) return Verdict::fail("pool_positions must be within [0, num_blocks)");
    }
    const int m = space.candidates_per_block();
    for (const Bundle& b : space.bundles) {
        if (b.id.empty()) return Verdict::fail("bundle id is empty");
        if (b.ops.empty()) return Verdict::fail("bundle '" + b.id + "': ops is empty");
        if (static_cast<int>(b.ops.size()) != m)
            return Verdict::fail("bundle '" + b.id + "': every bundle needs the same candidate count M");
        int downsamplers = 0;
        for (std::size_t k = 0; k < b.ops.size(); ++k) {
            const auto& op = b.ops[k];
            if (auto v = validate_op(op, "bundle '" + b.id + "' " + slot_field("ops", k)); !v) return v;
            for (int q : op.allowed_quant_bits) {
                if (!contains(space.quant_bits, q))
                    return Verdict::fail("bundle '" + b.id + "' " + slot_field("ops", k) + ": quant bitwidth " +
                                         std::to_string(q) + " not in quant_bits");
            }
            if (op.kind == OpKind::Pool2x2) ++downsamplers;
        }
        if (downsamplers > 1) return Verdict::fail("bundle '" + b.id + "': at most one downsampling op per bundle");
        for (std::size_t j = 0; j < space.bundles.size(); ++j) {
            if (&space.bundles[j] != &b && space.bundles[j].id == b.id)
                return Verdict::fail("duplicate bundle id '" + b.id + "'");
        }
    }
    return Verdict::ok();
}

Verdict validate(const SearchSpace& space, const DesignPoint& point) {
    const int bi = space.bundle_index(point.bundle_id);
    if (bi < 0) return Verdict::fail("bundle_id '" + point.bundle_id + "' not in space");
    const Bundle& bundle = space.bundles[static_cast<std::size_t>(bi)];
    const int n = point.replications;
    if (n < space.min_replications || n > space.num_blocks)
        return Verdict::fail("replications " + std::to_string(n) + " outside [" + std::to_string(space.min_replications) +
                             ", " + std::to_string(space.num_blocks) + "]");
    const auto expect_len = [n](const std::vector<int>& v, const char* name) -> Verdict {
        if (static_cast<int>(v.size()) != n)
            return Verdict::fail(std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
        return Verdict::ok();
    };
    if (auto v = expect_len(point.op_choice, "op_choice"); !v) return v;
    if (auto v = expect_len(point.channels, "channels"); !v) return v;
    if (auto v = expect_len(point.quant_bits, "quant_bits"); !v) return v;
    if (auto v = expect_len(point.pf, "pf"); !v) return v;

    const int m = static_cast<int>(bundle.ops.size());
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        if (point.op_choice[i] < 0 || point.op_choice[i] >= m)
            return Verdict::fail(slot_field("op_choice", i) + " = " + std::to_string(point.op_choice[i]) + " outside [0, " +
                                 std::to_string(m) + ")");
        if (!contains(space.channel_choices[i], point.channels[i]))
            return Verdict::fail(slot_field("channels", i) + " = " + std::to_string(point.channels[i]) + " not in channel_choices");
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(point.op_choice[i])];
        if (!contains(op.allowed_quant_bits, point.quant_bits[i]))
            return Verdict::fail(slot_field("quant_bits", i) + " = " + std::to_string(point.quant_bits[i]) +
                                 " not allowed for " + op.label());
        if (point.pf[i] < op.pf_min || point.pf[i] > op.pf_max)
            return Verdict::fail(slot_field("pf", i) + " = " + std::to_string(point.pf[i]) + " outside [" +
                                 std::to_string(op.pf_min) + ", " + std::to_string(op.pf_max) + "]");
    }
    if (!strictly_increasing(point.pools)) return Verdict::fail("pools must be strictly increasing");
    if (!point.pools.empty() && !bundle.downsample_capable)
        return Verdict::fail("pools set but bundle '" + bundle.id + "' is not downsample_capable");
    for (int p : point.pools) {
        if (!contains(space.pool_positions, p)) return Verdict::fail("pool position " + std::to_string(p) + " not allowed");
        if (p >= n) return Verdict::fail("pool position " + std::to_string(p) + " beyond replications");
    }
    try {
        (void)shapes(space, point);
    } catch (const ShapeError& e) {
        return Verdict::fail(e.what());
    }
    return Verdict::ok();
}

std::vector<SlotShape> shapes(const SearchSpace& space, const DesignPoint& point) {
    const auto n = static_cast<std::size_t>(point.replications);
    std::vector<SlotShape> out;
    out.reserve(n);
    int h = space.input.h;
    int w = space.input.w;
    int c = space.input.c;
    for (std::size_t i = 0; i < n; ++i) {
        if (h < 1 || w < 1) throw ShapeError(static_cast<int>(i), "feature map collapses to zero before slot " + std::to_string(i));
        const int c_out = point.channels.at(i);
        out.push_back({h, w, c, c_out});
        c = c_out;
        if (contains(point.pools, static_cast<int>(i))) {
            h /= 2;
            w /= 2;
            if (h < 1 || w < 1)
                throw ShapeError(static_cast<int>(i), "pool after slot " + std::to_string(i) + " collapses the feature map to zero");
        }
    }
    return out;
}

DesignPoint default_point(const SearchSpace& space) {
    DesignPoint p;
    const Bundle& b = space.bundles.front();
    p.bundle_id = b.id;
    p.replications = space.num_blocks;
    const auto& op = b.ops.front();
    for (int i = 0; i < space.num_blocks; ++i) {
        p.op_choice.push_back(0);
        p.channels.push_back(space.channel_choices[static_cast<std::size_t>(i)].front());
        p.quant_bits.push_back(op.allowed_quant_bits.back());
        p.pf.push_back(op.pf_min);
    }
    return p;
}

void repair(const SearchSpace& space, DesignPoint& point) {
    const Bundle& bundle = space.bundle(point.bundle_id);
    const auto n = static_cast<std::size_t>(point.replications);
    for (std::size_t i = 0; i < n; ++i) {
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(point.op_choice[i])];
        int& q = point.quant_bits[i];
        if (!contains(op.allowed_quant_bits, q)) {
            // nearest allowed width, ties to the wider one
            int best = op.allowed_quant_bits.front();
            for (int cand : op.allowed_quant_bits) {
                if (std::abs(cand - q) <= std::abs(best - q)) best = cand;
            }
            q = best;
        }
        point.pf[i] = std::clamp(point.pf[i], op.pf_min, op.pf_max);
    }
    std::erase_if(point.pools, [&](int p) { return p >= point.replications; });
    if (!bundle.downsample_capable) point.pools.clear();
    while (!point.pools.empty()) {
        try {
            (void)shapes(space, point);
            break;
        } catch (const ShapeError&) {
            point.pools.pop_back();
        }
    }
}

DesignPoint sample_uniform(const SearchSpace& space, std::uint64_t seed) {
    if (space.bundles.empty()) throw std::invalid_argument("sample_uniform: space has no bundles");
    for (std::size_t i = 0; i < space.channel_choices.size(); ++i) {
        if (space.channel_choices[i].empty()) throw std::invalid_argument("sample_uniform: channel_choices[" + std::to_string(i) + "] is empty");
    }
    Rng rng = make_rng(seed, "sample_uniform");
    DesignPoint p;
    const Bundle& b = space.bundles[uniform_index(rng, space.bundles.size())];
    if (b.ops.empty()) throw std::invalid_argument("sample_uniform: bundle '" + b.id + "' has no ops");
    p.bundle_id = b.id;
    p.replications = uniform_int(rng, space.min_replications, space.num_blocks);
    const auto n = static_cast<std::size_t>(p.replications);
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = uniform_index(rng, b.ops.size());
        const OpCandidate& op = b.ops[m];
        if (op.allowed_quant_bits.empty()) throw std::invalid_argument("sample_uniform: op " + op.label() + " has no quant choices");
        p.op_choice.push_back(static_cast<int>(m));
        const auto& cc = space.channel_choices[i];
        p.channels.push_back(cc[uniform_index(rng, cc.size())]);
        p.quant_bits.push_back(op.allowed_quant_bits[uniform_index(rng, op.allowed_quant_bits.size())]);
        p.pf.push_back(uniform_int(rng, op.pf_min, op.pf_max));
    }
    for (int pos : space.pool_positions) {
        const bool take = (rng() >> 63) != 0;
        if (take && pos < p.replications && b.downsample_capable) p.pools.push_back(pos);
    }
    repair(space, p);
    return p;
}

std::vector<DesignPoint> enumerate(const SearchSpace& space, std::size_t limit) {
    std::vector<DesignPoint> out;
    for (const Bundle& b : space.bundles) {
        for (int n = space.min_replications; n <= space.num_blocks; ++n) {
            // per-slot option list: (op, channel, q, pf)
            std::vector<std::vector<std::array<int, 4>>> slot_opts(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
                for (std::size_t m = 0; m < b.ops.size(); ++m) {
                    const auto& op = b.ops[m];
                    for (int c : space.channel_choices[i])
                        for (int q : op.allowed_quant_bits)
                            for (int pf = op.pf_min; pf <= op.pf_max; ++pf)
                                slot_opts[i].push_back({static_cast<int>(m), c, q, pf});
                }
            }
            std::vector<int> pool_cands;
            if (b.downsample_capable) {
                for (int pos : space.pool_positions)
                    if (pos < n) pool_cands.push_back(pos);
            }
            const std::size_t pool_subsets = std::size_t{1} << pool_cands.size();
            std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
            while (true) {
                for (std::size_t mask = 0; mask < pool_subsets; ++mask) {
                    DesignPoint p;
                    p.bundle_id = b.id;
                    p.replications = n;
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                        const auto& o = slot_opts[i][idx[i]];
                        p.op_choice.push_back(o[0]);
                        p.channels.push_back(o[1]);
                        p.quant_bits.push_back(o[2]);
                        p.pf.push_back(o[3]);
                    }
                    for (std::size_t k = 0; k < pool_cands.size(); ++k)
                        if (mask & (std::size_t{1} << k)) p.pools.push_back(pool_cands[k]);
                    if (validate(space, p)) {
                        if (out.size() >= limit) throw std::length_error("enumerate: space exceeds limit of " + std::to_string(limit) + " points");
                        out.push_back(std::move(p));
                    }
                }
                std::size_t k = 0;
                while (k < idx.size() && ++idx[k] == slot_opts[k].size()) idx[k++] = 0;
                if (k == idx.size()) break;
            }
        }
    }
    return out;
}

}  // namespace codesign
