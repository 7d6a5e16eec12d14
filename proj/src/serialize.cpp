// SPDX-License-Identifier: Apache-2.0
#include "codesign/serialize.hpp"

#include <cmath>
#include <limits>

namespace codesign {

const char* to_string(Bound b) { return b == Bound::Compute ? "compute" : "memory"; }
const char* to_string(AccelMode m) { return m == AccelMode::Recursive ? "recursive" : "pipelined"; }

Json to_json(const DesignPoint& p) {
    Json j;
    j["bundle_id"] = p.bundle_id;
    j["replications"] = p.replications;
    j["op_choice"] = p.op_choice;
    j["channels"] = p.channels;
    j["pools"] = p.pools;
    j["quant_bits"] = p.quant_bits;
    j["pf"] = p.pf;
    return j;
}

DesignPoint point_from_json(const nlohmann::json& j) {
    DesignPoint p;
    p.bundle_id = j.at("bundle_id").get<std::string>();
    p.replications = j.at("replications").get<int>();
    p.op_choice = j.at("op_choice").get<std::vector<int>>();
    p.channels = j.at("channels").get<std::vector<int>>();
    p.pools = j.value("pools", std::vector<int>{});
    p.quant_bits = j.at("quant_bits").get<std::vector<int>>();
    p.pf = j.at("pf").get<std::vector<int>>();
    return p;
}

Json to_json(const Resources& r) {
    Json j;
    j["dsp"] = r.dsp;
    j["bram_kbit"] = r.bram_kbit;
    j["lut"] = r.lut;
    return j;
}

Json to_json(const PerfReport& r) {
    Json j;
    j["per_op_cycles"] = r.per_op_cycles;
    Json bounds = Json::array();
    for (Bound b : r.bound_kind) bounds.push_back(to_string(b));
    j["bound_kind"] = bounds;
    j["total_cycles"] = r.total_cycles;
    j["latency_ms"] = r.latency_ms;
    // JSON has no infinity; an all-free network reports null
    j["throughput_fps"] = std::isfinite(r.throughput_fps) ? Json(r.throughput_fps) : Json(nullptr);
    j["resources"] = to_json(r.resources);
    return j;
}

PerfReport perf_report_from_json(const nlohmann::json& j) {
    PerfReport r;
    r.per_op_cycles = j.at("per_op_cycles").get<std::vector<std::int64_t>>();
    for (const auto& b : j.at("bound_kind")) r.bound_kind.push_back(b.get<std::string>() == "memory" ? Bound::Memory : Bound::Compute);
    r.total_cycles = j.at("total_cycles").get<std::int64_t>();
    r.latency_ms = j.at("latency_ms").get<double>();
    const auto& t = j.at("throughput_fps");
    r.throughput_fps = t.is_null() ? std::numeric_limits<double>::infinity() : t.get<double>();
    const auto& res = j.at("resources");
    r.resources = {res.at("dsp").get<double>(), res.at("bram_kbit").get<double>(), res.at("lut").get<double>()};
    return r;
}

std::string to_jsonl(const Json& header, const SearchTrace& trace) {
    std::string out = Json{{"header", header}}.dump();
    out += '\n';
    for (const auto& r : trace.records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

}  // namespace codesign
