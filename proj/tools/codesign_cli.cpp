// SPDX-License-Identifier: Apache-2.0
//
// codesign: command-line front end. Exit codes: 0 success, 1 invalid input
// (config, point or arguments), 2 runtime failure.
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "codesign/accuracy.hpp"
#include "codesign/config.hpp"
#include "codesign/cycle_oracle.hpp"
#include "codesign/parallel.hpp"
#include "codesign/runner.hpp"

namespace fs = std::filesystem;
using namespace codesign;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    int threads = 0;
    std::optional<std::uint64_t> seed_override;
    std::string out;
};

RunConfig load(const std::string& path, const Common& common) {
    RunConfig cfg = load_run_config(path);
    if (common.seed_override) override_seed(cfg, *common.seed_override);
    if (!common.out.empty()) cfg.output_dir = common.out;
    return cfg;
}

DesignPoint load_point(const std::string& path, const SearchSpace& space) {
    nlohmann::json j;
    try {
        j = parse_json_text(read_text(path), path);
    } catch (const ConfigError& e) {
        throw InvalidInput(e.what());
    } catch (const std::runtime_error& e) {
        throw InvalidInput(e.what());
    }
    DesignPoint p;
    try {
        p = point_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    if (auto v = validate(space, p); !v) throw InvalidInput(path + ": invalid design point: " + v.reason);
    return p;
}

SchedulePolicy parse_policy(const std::string& s) {
    if (s == "largest-fit") return SchedulePolicy::LargestFit;
    if (s == "whole-map") return SchedulePolicy::WholeMap;
    throw InvalidInput("--schedule must be 'largest-fit' or 'whole-map'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hardware/architecture co-design search"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed-override", common.seed_override, "Replace the config's root seed");
    app.add_option("--out", common.out, "Replace the config's output directory");

    std::string config_path;
    std::string point_path;
    std::string run_dir;
    std::string schedule = "largest-fit";

    auto* validate_cmd = app.add_subcommand("validate", "Check a config against its schema and invariants");
    validate_cmd->add_option("config", config_path)->required();

    auto* estimate_cmd = app.add_subcommand("estimate", "Analytical performance report of a design point");
    estimate_cmd->add_option("config", config_path)->required();
    estimate_cmd->add_option("point", point_path)->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "Tile-level simulation and crosscheck of a design point");
    simulate_cmd->add_option("config", config_path)->required();
    simulate_cmd->add_option("point", point_path)->required();
    simulate_cmd->add_option("--schedule", schedule, "largest-fit or whole-map");

    auto* select_cmd = app.add_subcommand("select-bundles", "Score bundles and mark the resource/accuracy front");
    select_cmd->add_option("config", config_path)->required();

    auto* search_cmd = app.add_subcommand("search", "Run the configured search strategy");
    search_cmd->add_option("config", config_path)->required();

    auto* report_cmd = app.add_subcommand("report", "Pareto and convergence tables of a finished run");
    report_cmd->add_option("run_dir", run_dir)->required();

    std::uint64_t ds_seed = 7;
    int ds_classes = 3;
    int ds_per_class = 100;
    std::size_t ds_dim = 4;
    double ds_spread = 1.0;
    std::string ds_path;
    auto* gen_cmd = app.add_subcommand("gen-dataset", "Write the synthetic blob dataset as CSV");
    gen_cmd->add_option("path", ds_path, "Output CSV file")->required();
    gen_cmd->add_option("--seed", ds_seed);
    gen_cmd->add_option("--classes", ds_classes)->check(CLI::Range(2, 1000));
    gen_cmd->add_option("--per-class", ds_per_class)->check(CLI::Range(1, 1000000));
    gen_cmd->add_option("--dim", ds_dim)->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
    gen_cmd->add_option("--spread", ds_spread)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    if (common.threads > 0) set_threads(common.threads);

    try {
        if (*validate_cmd) {
            const RunConfig cfg = load(config_path, common);
            std::cout << "ok: " << config_path << " (strategy " << strategy_name(cfg.strategy) << ", "
                      << cfg.space.bundles.size() << " bundles, N=" << cfg.space.num_blocks
                      << ", M=" << cfg.space.candidates_per_block() << ", Q=" << cfg.space.quant_choices() << ")\n";
        } else if (*estimate_cmd) {
            const RunConfig cfg = load(config_path, common);
            const DesignPoint p = load_point(point_path, cfg.space);
            const std::string text = to_json(evaluate(p, cfg.space, cfg.platform)).dump(2) + "\n";
            write_text(cfg.output_dir / "estimate.json", text);
            std::cout << text;
        } else if (*simulate_cmd) {
            const RunConfig cfg = load(config_path, common);
            const SchedulePolicy policy = parse_policy(schedule);
            const DesignPoint p = load_point(point_path, cfg.space);
            const CrosscheckReport rep = crosscheck(p, cfg.space, cfg.platform, policy);
            Json j;
            j["schedule"] = schedule;
            j["analytical_total"] = rep.analytical_total;
            j["total_cycles"] = rep.simulated_total;
            j["any_flagged"] = rep.any_flagged;
            Json ops = Json::array();
            for (const auto& e : rep.ops)
                ops.push_back(Json{{"slot", e.slot},
                                   {"analytical", e.analytical},
                                   {"simulated", e.simulated},
                                   {"relative_error", e.relative_error},
                                   {"flagged", e.flagged}});
            j["ops"] = ops;
            std::ostringstream csv;
            write_tile_trace_csv(csv, p, cfg.space, cfg.platform, policy);
            write_text(cfg.output_dir / "simulate.json", j.dump(2) + "\n");
            write_text(cfg.output_dir / "tile_trace.csv", csv.str());
            std::cout << j.dump(2) << "\n";
        } else if (*select_cmd) {
            const RunConfig cfg = load(config_path, common);
            const auto evaluator = make_evaluator(cfg);
            const BundleSelection sel = score_bundles(cfg.space, cfg.platform, *evaluator, cfg.bundle_selection.trials,
                                                      derive_seed(cfg.seed, "bundle_selection"), cfg.bundle_selection.weights);
            std::ostringstream csv;
            write_bundle_scores_csv(csv, sel);
            write_text(cfg.output_dir / "bundle_scores.csv", csv.str());
            std::cout << csv.str();
        } else if (*search_cmd) {
            const RunConfig cfg = load(config_path, common);
            const SearchOutcome o = run_search(cfg);
            write_search_outputs(cfg, o, cfg.output_dir);
            std::cout << "best " << o.summary["best_point"].dump() << "\nobjective " << o.summary["objective"].dump()
                      << "\nwritten to " << cfg.output_dir.string() << "\n";
        } else if (*report_cmd) {
            if (!fs::is_directory(run_dir)) throw InvalidInput("not a run directory: " + run_dir);
            write_report(run_dir);
            std::cout << "wrote " << (fs::path(run_dir) / "pareto.csv").string() << " and "
                      << (fs::path(run_dir) / "curve.csv").string() << "\n";
        } else if (*gen_cmd) {
            const ProxyDataset ds = make_blobs(ds_seed, ds_classes, ds_per_class, ds_dim, 5.0, ds_spread);
            std::ostringstream csv;
            write_dataset_csv(csv, ds);
            write_text(ds_path, csv.str());
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
