// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a single JSON document (see README for the schema).
// Every error names the offending field path, or the line and column for
// malformed JSON. Relative file references resolve against the config file's
// directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "json.hpp"

#include "codesign/accuracy.hpp"
#include "codesign/edd.hpp"
#include "codesign/objective.hpp"
#include "codesign/pareto.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/pso.hpp"
#include "codesign/scd.hpp"
#include "codesign/space.hpp"

namespace codesign {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class EvaluatorKind { Surrogate, Proxy };

struct EvaluatorConfig {
    EvaluatorKind kind = EvaluatorKind::Surrogate;
    SurrogateParams surrogate;
    std::filesystem::path dataset;  // proxy only
    ProxyConfig proxy;
    double floor = 0.05;
};

struct BundleSelectionConfig {
    bool enabled = false;
    int trials = 8;
    ResourceWeights weights;
};

using StrategyConfig = std::variant<ScdConfig, PsoConfig, EddConfig>;

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    SearchSpace space;
    PlatformModel platform;
    ObjectiveSpec objective;
    EvaluatorConfig evaluator;
    StrategyConfig strategy;
    BundleSelectionConfig bundle_selection;
    std::filesystem::path source;  // the config file
    std::string text;              // its exact bytes
};

std::string strategy_name(const StrategyConfig& s);

// Parse helpers, usable on their own for tests.
SearchSpace parse_space(const nlohmann::json& j, const std::string& path = "space");
PlatformModel parse_platform(const nlohmann::json& j, const std::string& path = "platform");
nlohmann::json parse_json_text(const std::string& text, const std::string& what);

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& source);
RunConfig load_run_config(const std::filesystem::path& path);
// Re-seeds every strategy from a new root seed.
void override_seed(RunConfig& cfg, std::uint64_t seed);

std::unique_ptr<AccuracyEvaluator> make_evaluator(const RunConfig& cfg);

std::uint64_t config_hash(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace codesign
