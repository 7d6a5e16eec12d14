// SPDX-License-Identifier: Apache-2.0
//
// Stochastic coordinate descent over the discrete co-design knobs. Each step
// perturbs one coordinate; a proposal is accepted only when it satisfies the
// hard constraints and strictly lowers acc_loss.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codesign/accuracy.hpp"
#include "codesign/objective.hpp"
#include "codesign/serialize.hpp"

namespace codesign {

enum class ScdCoord { Replications, Pools, Channels, Quant, Pf, Op };

const char* to_string(ScdCoord c);
ScdCoord scd_coord_from_string(const std::string& name);

struct ScdConfig {
    int max_iters = 200;
    std::vector<ScdCoord> coords{ScdCoord::Replications, ScdCoord::Pools, ScdCoord::Channels,
                                 ScdCoord::Quant,        ScdCoord::Pf,    ScdCoord::Op};
    std::map<ScdCoord, int> proposal_radius;  // default 1 per coordinate
    int restarts = 1;
    int patience = 0;  // stop after this many consecutive rejections; 0 disables
    int init_attempts = 1000;
    // When a proposal breaks a constraint, re-choose the knobs that do not
    // affect acc_loss (pf, pools) and, after an architecture move, the touched
    // slots' bitwidth, before giving up on it.
    bool refit = true;
    long long refit_max_combinations = 4096;
    std::optional<std::string> bundle_id;  // restrict to one bundle (e.g. the Pareto pick)
    std::uint64_t seed = 0;
};

Verdict validate_scd(const ScdConfig& cfg);

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScdRun {
    DesignPoint best;
    ObjectiveTerms best_terms;
    std::vector<double> accepted_objectives;  // initial point first
    int iterations = 0;
};

struct ScdResult {
    DesignPoint best;
    ObjectiveTerms best_terms;
    std::vector<ScdRun> runs;
    SearchTrace trace;
};

// One restart; records go to `trace` tagged with `restart`.
ScdRun scd_restart(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                   const ObjectiveSpec& objective, const ScdConfig& cfg, int restart, SearchTrace& trace);

// All restarts (in parallel, split seeds); best over restarts, ties to the
// lower restart index.
ScdResult scd_search(const SearchSpace& space, const PlatformModel& platform, const AccuracyEvaluator& evaluator,
                     const ObjectiveSpec& objective, const ScdConfig& cfg);

}  // namespace codesign
