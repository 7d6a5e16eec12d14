// SPDX-License-Identifier: Apache-2.0
#include "codesign/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "codesign/rng.hpp"

namespace codesign {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const char* type_name(const json& j) {
    return j.type_name();
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, std::string("expected an object, got ") + type_name(j));
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    expect_object(j, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(join(path, k), "unknown field");
}

const json& need(const json& j, const std::string& path, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
    return *it;
}

template <class T>
T as(const json& v, const std::string& path);

template <>
double as<double>(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, std::string("expected a number, got ") + type_name(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
}

template <>
std::int64_t as<std::int64_t>(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, std::string("expected an integer, got ") + type_name(v));
    return v.get<std::int64_t>();
}

template <>
int as<int>(const json& v, const std::string& path) {
    const auto x = as<std::int64_t>(v, path);
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(path, "integer out of range");
    return static_cast<int>(x);
}

template <>
std::uint64_t as<std::uint64_t>(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

template <>
bool as<bool>(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, std::string("expected a boolean, got ") + type_name(v));
    return v.get<bool>();
}

template <>
std::string as<std::string>(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, std::string("expected a string, got ") + type_name(v));
    return v.get<std::string>();
}

template <>
std::vector<int> as<std::vector<int>>(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, std::string("expected an array, got ") + type_name(v));
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as<int>(v[i], index(path, i)));
    return out;
}

template <class T>
void opt(const json& j, const std::string& path, const char* key, T& target) {
    if (const auto it = j.find(key); it != j.end()) target = as<T>(*it, join(path, key));
}

template <class T>
T req(const json& j, const std::string& path, const char* key) {
    return as<T>(need(j, path, key), join(path, key));
}

std::map<int, double> parse_bit_map(const json& j, const std::string& path) {
    expect_object(j, path);
    std::map<int, double> out;
    for (const auto& [k, v] : j.items()) {
        int bits = 0;
        try {
            std::size_t used = 0;
            bits = std::stoi(k, &used);
            if (used != k.size()) throw std::invalid_argument(k);
        } catch (const std::exception&) {
            throw ConfigError(join(path, k), "keys must be integer bit widths");
        }
        out[bits] = as<double>(v, join(path, k));
    }
    return out;
}

OpCandidate parse_op(const json& j, const std::string& path, const std::vector<int>& global_q) {
    only_keys(j, path, {"kind", "kernel_size", "expansion_ratio", "allowed_quant_bits", "pf_min", "pf_max"});
    OpCandidate op;
    const auto kind = req<std::string>(j, path, "kind");
    try {
        op.kind = op_kind_from_string(kind);
    } catch (const std::exception& e) {
        throw ConfigError(join(path, "kind"), e.what());
    }
    opt(j, path, "kernel_size", op.kernel_size);
    opt(j, path, "expansion_ratio", op.expansion_ratio);
    op.allowed_quant_bits = global_q;
    opt(j, path, "allowed_quant_bits", op.allowed_quant_bits);
    opt(j, path, "pf_min", op.pf_min);
    opt(j, path, "pf_max", op.pf_max);
    return op;
}

Resources parse_resources(const json& j, const std::string& path) {
    only_keys(j, path, {"dsp", "bram_kbit", "lut"});
    return {req<double>(j, path, "dsp"), req<double>(j, path, "bram_kbit"), req<double>(j, path, "lut")};
}

ObjectiveSpec parse_objective(const json& j, const std::string& path, const PlatformModel& platform) {
    only_keys(j, path, {"beta", "penalty_base", "res_ub", "latency_target_ms", "perf_mode", "penalty_sharpness"});
    ObjectiveSpec s = objective_for(platform);
    opt(j, path, "beta", s.beta);
    opt(j, path, "penalty_base", s.penalty_base);
    if (j.contains("res_ub")) s.res_ub = parse_resources(j["res_ub"], join(path, "res_ub"));
    s.latency_target_ms = req<double>(j, path, "latency_target_ms");
    std::string mode = "latency_sum";
    opt(j, path, "perf_mode", mode);
    if (mode == "latency_sum") s.perf_mode = PerfMode::LatencySum;
    else if (mode == "throughput_max") s.perf_mode = PerfMode::ThroughputMax;
    else throw ConfigError(join(path, "perf_mode"), "expected 'latency_sum' or 'throughput_max'");
    opt(j, path, "penalty_sharpness", s.penalty_sharpness);
    if (auto v = validate_objective(s); !v) throw ConfigError(path, v.reason);
    return s;
}

SurrogateParams parse_surrogate(const json& j, const std::string& path) {
    only_keys(j, path, {"capacity_weight", "depth_weight", "quant_penalty", "floor"});
    SurrogateParams p;
    opt(j, path, "capacity_weight", p.capacity_weight);
    opt(j, path, "depth_weight", p.depth_weight);
    if (j.contains("quant_penalty")) p.quant_penalty = parse_bit_map(j["quant_penalty"], join(path, "quant_penalty"));
    opt(j, path, "floor", p.floor);
    return p;
}

EvaluatorConfig parse_evaluator(const json& j, const std::string& path, const std::filesystem::path& base,
                                const SearchSpace& space) {
    only_keys(j, path, {"kind", "surrogate", "dataset", "proxy", "floor"});
    EvaluatorConfig e;
    const auto kind = req<std::string>(j, path, "kind");
    if (j.contains("surrogate")) e.surrogate = parse_surrogate(j["surrogate"], join(path, "surrogate"));
    if (auto v = validate_surrogate(e.surrogate, space); !v) throw ConfigError(join(path, "surrogate"), v.reason);
    if (kind == "surrogate") {
        e.kind = EvaluatorKind::Surrogate;
        return e;
    }
    if (kind != "proxy") throw ConfigError(join(path, "kind"), "expected 'surrogate' or 'proxy'");
    e.kind = EvaluatorKind::Proxy;
    e.dataset = base / req<std::string>(j, path, "dataset");
    if (!std::filesystem::exists(e.dataset)) throw ConfigError(join(path, "dataset"), "file not found: " + e.dataset.string());
    if (j.contains("proxy")) {
        const auto pp = join(path, "proxy");
        only_keys(j["proxy"], pp, {"width_scale", "min_width", "lr", "epochs"});
        opt(j["proxy"], pp, "width_scale", e.proxy.width_scale);
        opt(j["proxy"], pp, "min_width", e.proxy.min_width);
        opt(j["proxy"], pp, "lr", e.proxy.lr);
        opt(j["proxy"], pp, "epochs", e.proxy.epochs);
        if (e.proxy.epochs < 1) throw ConfigError(join(pp, "epochs"), "must be >= 1");
        if (!(e.proxy.lr > 0.0)) throw ConfigError(join(pp, "lr"), "must be > 0");
        if (!(e.proxy.width_scale > 0.0)) throw ConfigError(join(pp, "width_scale"), "must be > 0");
        if (e.proxy.min_width < 1) throw ConfigError(join(pp, "min_width"), "must be >= 1");
    }
    opt(j, path, "floor", e.floor);
    if (!(e.floor > 0.0)) throw ConfigError(join(path, "floor"), "must be > 0");
    return e;
}

ScdConfig parse_scd(const json& j, const std::string& path, const SearchSpace& space) {
    only_keys(j, path, {"max_iters", "coords", "proposal_radius", "restarts", "patience", "init_attempts", "refit",
                        "refit_max_combinations", "bundle_id"});
    ScdConfig c;
    opt(j, path, "max_iters", c.max_iters);
    if (j.contains("coords")) {
        const auto cp = join(path, "coords");
        if (!j["coords"].is_array()) throw ConfigError(cp, "expected an array");
        c.coords.clear();
        for (std::size_t i = 0; i < j["coords"].size(); ++i) {
            try {
                c.coords.push_back(scd_coord_from_string(as<std::string>(j["coords"][i], index(cp, i))));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(index(cp, i), e.what());
            }
        }
    }
    if (j.contains("proposal_radius")) {
        const auto rp = join(path, "proposal_radius");
        expect_object(j["proposal_radius"], rp);
        for (const auto& [k, v] : j["proposal_radius"].items()) {
            try {
                c.proposal_radius[scd_coord_from_string(k)] = as<int>(v, join(rp, k));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(join(rp, k), e.what());
            }
        }
    }
    opt(j, path, "restarts", c.restarts);
    opt(j, path, "patience", c.patience);
    opt(j, path, "init_attempts", c.init_attempts);
    opt(j, path, "refit", c.refit);
    if (j.contains("refit_max_combinations")) c.refit_max_combinations = req<std::int64_t>(j, path, "refit_max_combinations");
    if (j.contains("bundle_id")) {
        c.bundle_id = req<std::string>(j, path, "bundle_id");
        if (space.bundle_index(*c.bundle_id) < 0) throw ConfigError(join(path, "bundle_id"), "not a bundle of the space");
    }
    if (auto v = validate_scd(c); !v) throw ConfigError(path, v.reason);
    return c;
}

PsoConfig parse_pso(const json& j, const std::string& path) {
    only_keys(j, path, {"swarm_size", "iters", "inertia", "cognitive", "social", "group_social", "fitness_lambda"});
    PsoConfig c;
    opt(j, path, "swarm_size", c.swarm_size);
    opt(j, path, "iters", c.iters);
    opt(j, path, "inertia", c.inertia);
    opt(j, path, "cognitive", c.cognitive);
    opt(j, path, "social", c.social);
    opt(j, path, "group_social", c.group_social);
    opt(j, path, "fitness_lambda", c.fitness_lambda);
    if (auto v = validate_pso(c); !v) throw ConfigError(path, v.reason);
    return c;
}

EddConfig parse_edd(const json& j, const std::string& path, const SearchSpace& space) {
    only_keys(j, path, {"epochs", "lr_theta", "lr_phi", "lr_pf", "grad_clip", "gumbel", "skeleton"});
    EddConfig c;
    opt(j, path, "epochs", c.epochs);
    opt(j, path, "lr_theta", c.lr_theta);
    opt(j, path, "lr_phi", c.lr_phi);
    opt(j, path, "lr_pf", c.lr_pf);
    if (j.contains("grad_clip")) {
        if (j["grad_clip"].is_null()) c.grad_clip.reset();
        else c.grad_clip = as<double>(j["grad_clip"], join(path, "grad_clip"));
    }
    if (j.contains("gumbel")) {
        const auto gp = join(path, "gumbel");
        only_keys(j["gumbel"], gp, {"tau_start", "tau_end", "decay"});
        opt(j["gumbel"], gp, "tau_start", c.gumbel.tau_start);
        opt(j["gumbel"], gp, "tau_end", c.gumbel.tau_end);
        opt(j["gumbel"], gp, "decay", c.gumbel.decay);
    }
    const auto sp = join(path, "skeleton");
    const json& sk = need(j, path, "skeleton");
    only_keys(sk, sp, {"bundle_id", "channels", "pools"});
    c.skeleton.bundle_id = req<std::string>(sk, sp, "bundle_id");
    c.skeleton.channels = req<std::vector<int>>(sk, sp, "channels");
    opt(sk, sp, "pools", c.skeleton.pools);
    if (auto v = validate_edd(c, space); !v) throw ConfigError(path, v.reason);
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("", what + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON (" +
                                  e.what() + ")");
    }
}

SearchSpace parse_space(const json& j, const std::string& path) {
    only_keys(j, path, {"num_blocks", "min_replications", "quant_bits", "channel_choices", "pool_positions", "input", "num_classes",
                        "bundles"});
    SearchSpace s;
    s.num_blocks = req<int>(j, path, "num_blocks");
    if (s.num_blocks < 1) throw ConfigError(join(path, "num_blocks"), "must be >= 1");
    s.min_replications = s.num_blocks;
    opt(j, path, "min_replications", s.min_replications);
    s.quant_bits = req<std::vector<int>>(j, path, "quant_bits");

    const auto cp = join(path, "channel_choices");
    const json& cc = need(j, path, "channel_choices");
    if (!cc.is_array() || cc.empty()) throw ConfigError(cp, "expected a nonempty array");
    if (cc[0].is_number()) {
        // one list shared by every slot
        s.channel_choices.assign(static_cast<std::size_t>(s.num_blocks), as<std::vector<int>>(cc, cp));
    } else {
        for (std::size_t i = 0; i < cc.size(); ++i) s.channel_choices.push_back(as<std::vector<int>>(cc[i], index(cp, i)));
    }
    opt(j, path, "pool_positions", s.pool_positions);
    if (j.contains("input")) {
        const auto ip = join(path, "input");
        only_keys(j["input"], ip, {"h", "w", "c"});
        s.input = {req<int>(j["input"], ip, "h"), req<int>(j["input"], ip, "w"), req<int>(j["input"], ip, "c")};
    }
    opt(j, path, "num_classes", s.num_classes);

    const auto bp = join(path, "bundles");
    const json& bundles = need(j, path, "bundles");
    if (!bundles.is_array() || bundles.empty()) throw ConfigError(bp, "expected a nonempty array");
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        const auto p = index(bp, b);
        only_keys(bundles[b], p, {"id", "ops", "downsample_capable"});
        Bundle bundle;
        bundle.id = req<std::string>(bundles[b], p, "id");
        opt(bundles[b], p, "downsample_capable", bundle.downsample_capable);
        const json& ops = need(bundles[b], p, "ops");
        if (!ops.is_array() || ops.empty()) throw ConfigError(join(p, "ops"), "expected a nonempty array");
        int pf_lo = INT32_MAX;
        int pf_hi = INT32_MIN;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            bundle.ops.push_back(parse_op(ops[k], index(join(p, "ops"), k), s.quant_bits));
            pf_lo = std::min(pf_lo, bundle.ops.back().pf_min);
            pf_hi = std::max(pf_hi, bundle.ops.back().pf_max);
        }
        // Identity lets a slot switch off; it accepts every width and pf.
        OpCandidate id;
        id.kind = OpKind::Identity;
        id.allowed_quant_bits = s.quant_bits;
        id.pf_min = pf_lo;
        id.pf_max = std::max(pf_lo, pf_hi);
        bundle.ops.push_back(id);
        s.bundles.push_back(std::move(bundle));
    }
    if (auto v = validate_space(s); !v) throw ConfigError(path, v.reason);
    return s;
}

PlatformModel parse_platform(const json& j, const std::string& path) {
    only_keys(j, path, {"clock_mhz", "dsp_budget", "bram_budget_kbit", "lut_budget", "bw_bytes_per_cycle", "dsp_per_lane",
                        "lut_per_lane", "overhead_cycles_per_op", "accel_mode", "smooth_sharpness", "tile_buffer_kbit",
                        "crosscheck_tolerance"});
    PlatformModel p;
    opt(j, path, "clock_mhz", p.clock_mhz);
    opt(j, path, "dsp_budget", p.dsp_budget);
    opt(j, path, "bram_budget_kbit", p.bram_budget_kbit);
    opt(j, path, "lut_budget", p.lut_budget);
    opt(j, path, "bw_bytes_per_cycle", p.bw_bytes_per_cycle);
    if (j.contains("dsp_per_lane")) p.dsp_per_lane = parse_bit_map(j["dsp_per_lane"], join(path, "dsp_per_lane"));
    opt(j, path, "lut_per_lane", p.lut_per_lane);
    opt(j, path, "overhead_cycles_per_op", p.overhead_cycles_per_op);
    std::string mode = "recursive";
    opt(j, path, "accel_mode", mode);
    if (mode == "recursive") p.accel_mode = AccelMode::Recursive;
    else if (mode == "pipelined") p.accel_mode = AccelMode::Pipelined;
    else throw ConfigError(join(path, "accel_mode"), "expected 'recursive' or 'pipelined'");
    opt(j, path, "smooth_sharpness", p.smooth_sharpness);
    opt(j, path, "tile_buffer_kbit", p.tile_buffer_kbit);
    opt(j, path, "crosscheck_tolerance", p.crosscheck_tolerance);
    return p;
}

std::string strategy_name(const StrategyConfig& s) {
    static const char* names[] = {"scd", "pso", "edd"};
    return names[s.index()];
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& source) {
    const json j = parse_json_text(text, source.string());
    only_keys(j, "", {"schema_version", "seed", "output_dir", "space", "platform", "objective", "evaluator", "strategy",
                      "bundle_selection"});
    RunConfig c;
    c.source = source;
    c.text = text;
    const auto base = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");

    c.schema_version = req<int>(j, "", "schema_version");
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                                std::to_string(kSchemaVersion) + ")");
    c.seed = req<std::uint64_t>(j, "", "seed");
    c.output_dir = base / req<std::string>(j, "", "output_dir");

    const json& sp = need(j, "", "space");
    if (sp.is_string()) {
        const auto file = base / sp.get<std::string>();
        if (!std::filesystem::exists(file)) throw ConfigError("space", "file not found: " + file.string());
        c.space = parse_space(parse_json_text(slurp(file), file.string()), "space");
    } else {
        c.space = parse_space(sp, "space");
    }
    if (j.contains("platform")) c.platform = parse_platform(j["platform"], "platform");
    if (auto v = validate_platform(c.platform, c.space); !v) throw ConfigError("platform", v.reason);
    c.objective = parse_objective(need(j, "", "objective"), "objective", c.platform);
    if (j.contains("evaluator")) c.evaluator = parse_evaluator(j["evaluator"], "evaluator", base, c.space);

    const json& st = need(j, "", "strategy");
    expect_object(st, "strategy");
    if (st.size() != 1) throw ConfigError("strategy", "must contain exactly one of 'scd', 'pso', 'edd'");
    const auto& [name, body] = *st.items().begin();
    if (name == "scd") c.strategy = parse_scd(body, "strategy.scd", c.space);
    else if (name == "pso") c.strategy = parse_pso(body, "strategy.pso");
    else if (name == "edd") {
        if (c.evaluator.kind != EvaluatorKind::Surrogate)
            throw ConfigError("evaluator.kind", "the edd strategy needs the differentiable surrogate evaluator");
        c.strategy = parse_edd(body, "strategy.edd", c.space);
    } else {
        throw ConfigError("strategy." + name, "unknown strategy (expected scd, pso or edd)");
    }

    if (j.contains("bundle_selection")) {
        const auto& b = j["bundle_selection"];
        only_keys(b, "bundle_selection", {"enabled", "trials", "weights"});
        opt(b, "bundle_selection", "enabled", c.bundle_selection.enabled);
        opt(b, "bundle_selection", "trials", c.bundle_selection.trials);
        if (c.bundle_selection.trials < 1) throw ConfigError("bundle_selection.trials", "must be >= 1");
        if (b.contains("weights")) {
            const auto& w = b["weights"];
            only_keys(w, "bundle_selection.weights", {"dsp", "bram", "lut"});
            opt(w, "bundle_selection.weights", "dsp", c.bundle_selection.weights.dsp);
            opt(w, "bundle_selection.weights", "bram", c.bundle_selection.weights.bram);
            opt(w, "bundle_selection.weights", "lut", c.bundle_selection.weights.lut);
        }
    }
    override_seed(c, c.seed);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("", "config file not found: " + path.string());
    return parse_run_config(slurp(path), path);
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    const std::uint64_t s = derive_seed(seed, "strategy");
    std::visit([s](auto& st) { st.seed = s; }, cfg.strategy);
}

std::unique_ptr<AccuracyEvaluator> make_evaluator(const RunConfig& cfg) {
    if (cfg.evaluator.kind == EvaluatorKind::Surrogate) return std::make_unique<SurrogateEvaluator>(cfg.evaluator.surrogate);
    ProxyDataset ds = load_dataset_csv(cfg.evaluator.dataset, derive_seed(cfg.seed, "dataset_split"));
    return std::make_unique<ProxyEvaluator>(std::move(ds), cfg.evaluator.proxy, cfg.evaluator.floor);
}

std::uint64_t config_hash(const std::string& bytes) { return fnv1a64(bytes); }

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

}  // namespace codesign
