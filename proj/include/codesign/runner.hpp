// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration behind the command-line tool: run a configured
// search, persist its artifacts, and turn a finished run into plot tables.
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "codesign/config.hpp"
#include "codesign/serialize.hpp"

namespace codesign {

inline constexpr const char* kToolVersion = "0.1.0";

struct SearchOutcome {
    Json header;
    Json summary;
    SearchTrace trace;
    std::optional<Json> relaxed_state;
    std::optional<BundleSelection> bundles;
};

Json run_header(const RunConfig& cfg);

SearchOutcome run_search(const RunConfig& cfg);

// config.json (verbatim), trace.jsonl, summary.json, and for edd
// relaxed_state.json; bundle_scores.csv when bundle selection ran.
void write_search_outputs(const RunConfig& cfg, const SearchOutcome& outcome, const std::filesystem::path& dir);

// Reads trace.jsonl and summary.json from `run_dir` and writes pareto.csv and
// curve.csv next to them.
void write_report(const std::filesystem::path& run_dir);

// Re-evaluates a summary's best point under `cfg`; returns |recorded - recomputed|
// of the objective total.
double summary_objective_drift(const RunConfig& cfg, const Json& summary);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace codesign
