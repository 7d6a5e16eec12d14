// SPDX-License-Identifier: Apache-2.0
#include "codesign/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "codesign/rng.hpp"

namespace codesign {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json run_header(const RunConfig& cfg) {
    Json h;
    h["tool"] = "codesign";
    h["version"] = kToolVersion;
    h["config_hash"] = hex64(config_hash(cfg.text));
    h["seed"] = cfg.seed;
    h["strategy"] = strategy_name(cfg.strategy);
    h["evaluator"] = cfg.evaluator.kind == EvaluatorKind::Surrogate ? "surrogate" : "proxy";
    return h;
}

namespace {

Json terms_json(const ObjectiveTerms& t) {
    Json j;
    j["acc_loss"] = t.acc_loss;
    j["accuracy"] = t.accuracy;
    j["perf_loss"] = t.perf_loss;
    j["penalty"] = t.penalty;
    j["total"] = t.total;
    j["feasible"] = t.feasible;
    return j;
}

Json summary_json(const Json& header, const DesignPoint& best, const ObjectiveTerms& t, const PlatformModel& platform) {
    Json s;
    s["header"] = header;
    s["best_point"] = to_json(best);
    s["objective"] = terms_json(t);
    s["resource_scalar"] = resource_scalar(t.perf.resources, platform);
    s["perf"] = to_json(t.perf);
    return s;
}

// Highest-accuracy member of the Pareto front.
std::string pick_bundle(const BundleSelection& sel) {
    std::size_t best = sel.front.front();
    for (std::size_t i : sel.front)
        if (sel.scores[i].accuracy > sel.scores[best].accuracy) best = i;
    return sel.scores[best].bundle_id;
}

}  // namespace

SearchOutcome run_search(const RunConfig& cfg) {
    SearchOutcome out;
    out.header = run_header(cfg);
    const auto evaluator = make_evaluator(cfg);
    const std::uint64_t eval_seed = derive_seed(std::visit([](const auto& s) { return s.seed; }, cfg.strategy), "evaluator");

    if (cfg.bundle_selection.enabled)
        out.bundles = score_bundles(cfg.space, cfg.platform, *evaluator, cfg.bundle_selection.trials,
                                    derive_seed(cfg.seed, "bundle_selection"), cfg.bundle_selection.weights);

    if (const auto* scd = std::get_if<ScdConfig>(&cfg.strategy)) {
        ScdConfig c = *scd;
        if (out.bundles && !c.bundle_id) c.bundle_id = pick_bundle(*out.bundles);
        ScdResult r = scd_search(cfg.space, cfg.platform, *evaluator, cfg.objective, c);
        out.trace = std::move(r.trace);
        ObjectiveTerms t = evaluate_objective(r.best, cfg.space, cfg.platform, cfg.objective, *evaluator, eval_seed);
        out.summary = summary_json(out.header, r.best, t, cfg.platform);
        out.summary["strategy_score"] = r.best_terms.acc_loss;
        Json runs = Json::array();
        for (std::size_t i = 0; i < r.runs.size(); ++i)
            runs.push_back(Json{{"restart", i},
                                {"acc_loss", r.runs[i].best_terms.acc_loss},
                                {"accepted", r.runs[i].accepted_objectives.size()},
                                {"iterations", r.runs[i].iterations}});
        out.summary["restarts"] = runs;
    } else if (const auto* pso = std::get_if<PsoConfig>(&cfg.strategy)) {
        PsoResult r = pso_search(cfg.space, cfg.platform, *evaluator, cfg.objective, *pso);
        out.trace = std::move(r.trace);
        out.summary = summary_json(out.header, r.best, r.best_terms, cfg.platform);
        out.summary["strategy_score"] = r.best_fitness;
        out.summary["gbest_history"] = r.gbest_history;
    } else {
        const auto& edd = std::get<EddConfig>(cfg.strategy);
        const auto* surrogate = dynamic_cast<const SurrogateEvaluator*>(evaluator.get());
        if (!surrogate) throw std::invalid_argument("edd requires the surrogate evaluator");
        EddResult r = edd_search(cfg.space, cfg.platform, *surrogate, cfg.objective, edd);
        out.trace = std::move(r.trace);
        out.summary = summary_json(out.header, r.best, r.best_terms, cfg.platform);
        out.summary["strategy_score"] = r.trace.records.empty() ? Json(nullptr) : r.trace.records.back()["loss"];
        out.summary["aborted"] = r.aborted;
        out.summary["epochs_run"] = r.epochs_run;
        out.relaxed_state = to_json(r.state);
    }
    if (out.bundles) {
        Json b = Json::array();
        for (const auto& s : out.bundles->scores)
            b.push_back(Json{{"bundle_id", s.bundle_id}, {"resource_scalar", s.resource_scalar}, {"accuracy", s.accuracy},
                             {"on_front", s.on_front}});
        out.summary["bundle_selection"] = b;
    }
    return out;
}

void write_search_outputs(const RunConfig& cfg, const SearchOutcome& o, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "config.json", cfg.text);
    write_text(dir / "trace.jsonl", to_jsonl(o.header, o.trace));
    write_text(dir / "summary.json", o.summary.dump(2) + "\n");
    if (o.relaxed_state) write_text(dir / "relaxed_state.json", o.relaxed_state->dump(2) + "\n");
    if (o.bundles) {
        std::ostringstream ss;
        write_bundle_scores_csv(ss, *o.bundles);
        write_text(dir / "bundle_scores.csv", ss.str());
    }
}

double summary_objective_drift(const RunConfig& cfg, const Json& summary) {
    const DesignPoint p = point_from_json(nlohmann::json::parse(summary.at("best_point").dump()));
    const auto evaluator = make_evaluator(cfg);
    const std::uint64_t eval_seed = derive_seed(std::visit([](const auto& s) { return s.seed; }, cfg.strategy), "evaluator");
    const ObjectiveTerms t = evaluate_objective(p, cfg.space, cfg.platform, cfg.objective, *evaluator, eval_seed);
    return std::abs(t.total - summary.at("objective").at("total").get<double>());
}

namespace {

std::string num(const nlohmann::json& v) {
    if (v.is_null()) return "";
    std::ostringstream ss;
    ss.precision(17);
    ss << v.get<double>();
    return ss.str();
}

}  // namespace

void write_report(const fs::path& run_dir) {
    const auto summary = nlohmann::json::parse(read_text(run_dir / "summary.json"));
    const std::string strategy = summary.at("header").at("strategy").get<std::string>();
    std::vector<nlohmann::json> records;
    {
        std::istringstream in(read_text(run_dir / "trace.jsonl"));
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw std::runtime_error("trace.jsonl line " + std::to_string(n) + ": " + e.what());
            }
            if (!j.contains("header")) records.push_back(std::move(j));
        }
    }

    // Pareto table over every evaluated point with known accuracy.
    struct Row {
        std::string source;
        std::string step;
        double cost;
        double value;
    };
    std::vector<Row> rows;
    if (strategy == "scd") {
        for (const auto& r : records)
            if (!r["accuracy"].is_null() && !r["resource_scalar"].is_null())
                rows.push_back({"restart" + std::to_string(r["restart"].get<int>()), std::to_string(r["iter"].get<int>()),
                                r["resource_scalar"].get<double>(), r["accuracy"].get<double>()});
    } else if (strategy == "pso") {
        for (const auto& r : records)
            rows.push_back({"particle" + std::to_string(r["particle"].get<int>()), std::to_string(r["iter"].get<int>()),
                            r["resource_scalar"].get<double>(), r["accuracy"].get<double>()});
    }
    rows.push_back({"best", "final", summary.at("resource_scalar").get<double>(),
                    summary.at("objective").at("accuracy").get<double>()});
    std::vector<CostValue> cv;
    for (const auto& r : rows) cv.push_back({r.cost, r.value});
    std::vector<bool> on_front(rows.size(), false);
    for (std::size_t i : pareto_front(cv)) on_front[i] = true;
    std::ostringstream pareto;
    pareto.precision(17);
    pareto << "source,step,resource_scalar,accuracy,on_front\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        pareto << rows[i].source << ',' << rows[i].step << ',' << rows[i].cost << ',' << rows[i].value << ','
               << (on_front[i] ? 1 : 0) << '\n';
    write_text(run_dir / "pareto.csv", pareto.str());

    // Per-iteration curve: value at each step and the best so far.
    std::ostringstream curve;
    curve.precision(17);
    curve << "series,step,value,best_so_far\n";
    if (strategy == "scd") {
        std::map<int, double> best;
        for (const auto& r : records) {
            const int restart = r["restart"].get<int>();
            if (r["accepted"].get<bool>()) best[restart] = r["objective"].get<double>();
            curve << restart << ',' << r["iter"].get<int>() << ',' << num(r["objective"]) << ',';
            if (best.count(restart)) curve << num(best[restart]);
            curve << '\n';
        }
    } else if (strategy == "pso") {
        std::map<int, double> iter_best;
        for (const auto& r : records) {
            const int it = r["iter"].get<int>();
            const double f = r["fitness"].get<double>();
            auto [pos, fresh] = iter_best.emplace(it, f);
            if (!fresh) pos->second = std::max(pos->second, f);
        }
        double run_best = -std::numeric_limits<double>::infinity();
        for (const auto& [it, f] : iter_best) {
            run_best = std::max(run_best, f);
            curve << 0 << ',' << it << ',' << f << ',' << run_best << '\n';
        }
    } else {
        double run_best = std::numeric_limits<double>::infinity();
        for (const auto& r : records) {
            const double l = r["loss"].get<double>();
            run_best = std::min(run_best, l);
            curve << 0 << ',' << r["epoch"].get<int>() << ',' << l << ',' << run_best << '\n';
        }
    }
    write_text(run_dir / "curve.csv", curve.str());
}

}  // namespace codesign
