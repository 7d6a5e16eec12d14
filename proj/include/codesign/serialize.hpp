// SPDX-License-Identifier: Apache-2.0
//
// JSON forms of the public value types. Field order is fixed (ordered_json)
// so that identical values always serialize to identical bytes.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "codesign/perf_model.hpp"
#include "codesign/space.hpp"

namespace codesign {

using Json = nlohmann::ordered_json;

Json to_json(const DesignPoint& point);
DesignPoint point_from_json(const nlohmann::json& j);

Json to_json(const Resources& r);
Json to_json(const PerfReport& report);
PerfReport perf_report_from_json(const nlohmann::json& j);

const char* to_string(Bound b);
const char* to_string(AccelMode m);

// A search's record stream: one JSON object per line.
struct SearchTrace {
    std::vector<Json> records;
};

std::string to_jsonl(const Json& header, const SearchTrace& trace);

}  // namespace codesign
