#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/dimension.hpp"

namespace dq {

/// One injected anomaly site; `original_value` is the pre-injection content.
struct TruthEntry {
    std::size_t row = 0;
    std::string col;
    Dimension dimension = Dimension::Completeness;
    std::string original_value;
};

struct GroundTruth {
    std::vector<TruthEntry> entries;
    std::map<std::size_t, std::size_t> duplicate_map;  // injected row -> source row

    nlohmann::json to_json() const;
    static GroundTruth from_json(const nlohmann::json& j);
    static GroundTruth load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace dq
