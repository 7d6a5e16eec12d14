// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit suites: small hand-built spaces and platforms,
// and a central-difference helper.
#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "codesign/objective.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/space.hpp"

namespace testing {

using namespace codesign;

inline OpCandidate conv1x1(int pf_min = 0, int pf_max = 6, std::vector<int> q = {4, 8, 16}) {
    OpCandidate op;
    op.kind = OpKind::Conv1x1;
    op.allowed_quant_bits = std::move(q);
    op.pf_min = pf_min;
    op.pf_max = pf_max;
    return op;
}

inline OpCandidate dwconv(int k, int pf_min = 0, int pf_max = 6, std::vector<int> q = {4, 8, 16}) {
    OpCandidate op = conv1x1(pf_min, pf_max, std::move(q));
    op.kind = OpKind::DwConvK;
    op.kernel_size = k;
    return op;
}

inline OpCandidate mbconv(int k, double e, int pf_min = 0, int pf_max = 6, std::vector<int> q = {4, 8, 16}) {
    OpCandidate op = conv1x1(pf_min, pf_max, std::move(q));
    op.kind = OpKind::MBConv;
    op.kernel_size = k;
    op.expansion_ratio = e;
    return op;
}

inline OpCandidate identity(int pf_min = 0, int pf_max = 6, std::vector<int> q = {4, 8, 16}) {
    OpCandidate op = conv1x1(pf_min, pf_max, std::move(q));
    op.kind = OpKind::Identity;
    return op;
}

inline OpCandidate pool2x2(std::vector<int> q = {4, 8, 16}) {
    OpCandidate op = conv1x1(0, 0, std::move(q));
    op.kind = OpKind::Pool2x2;
    return op;
}

// Three slots, two bundles of (op, op, Identity), channels {8, 16, 32}.
inline SearchSpace small_space() {
    SearchSpace s;
    s.num_blocks = 3;
    s.min_replications = 1;
    s.quant_bits = {4, 8, 16};
    s.channel_choices = {{8, 16, 32}, {8, 16, 32}, {8, 16, 32}};
    s.pool_positions = {0, 1};
    s.input = {16, 16, 8};
    s.bundles.push_back({"a", {conv1x1(), dwconv(3), identity()}, true});
    s.bundles.push_back({"b", {mbconv(3, 2.0), mbconv(5, 1.0), identity()}, true});
    return s;
}

inline PlatformModel roomy_platform() {
    PlatformModel p;
    p.clock_mhz = 100.0;
    p.dsp_budget = 4096;
    p.bram_budget_kbit = 1 << 20;
    p.lut_budget = 1 << 24;
    p.bw_bytes_per_cycle = 1e9;
    p.overhead_cycles_per_op = 0;
    return p;
}

inline std::filesystem::path source_dir() { return std::filesystem::path(CODESIGN_SOURCE_DIR); }

inline double rel_err(double a, double b, double abs_floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), abs_floor});
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace testing
