#include "dq/truth.hpp"

#include <fstream>

#include "dq/error.hpp"

namespace dq {

nlohmann::json GroundTruth::to_json() const {
    nlohmann::json j;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json ej;
        ej["row"] = e.row;
        ej["col"] = e.col;
        ej["dimension"] = to_string(e.dimension);
        ej["original_value"] = e.original_value;
        arr.push_back(ej);
    }
    j["entries"] = arr;
    nlohmann::json dup = nlohmann::json::object();
    for (const auto& [injected, source] : duplicate_map) dup[std::to_string(injected)] = source;
    j["duplicate_map"] = dup;
    return j;
}

GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
    GroundTruth t;
    for (const auto& ej : j.at("entries")) {
        TruthEntry e;
        e.row = ej.at("row").get<std::size_t>();
        e.col = ej.at("col").get<std::string>();
        auto dim = dimension_from_name(ej.at("dimension").get<std::string>());
        if (!dim) fail(ErrorCode::BadConfig, "unknown dimension in ground truth");
        e.dimension = *dim;
        e.original_value = ej.at("original_value").get<std::string>();
        t.entries.push_back(std::move(e));
    }
    if (j.contains("duplicate_map"))
        for (const auto& [k, v] : j.at("duplicate_map").items())
            t.duplicate_map[std::stoul(k)] = v.get<std::size_t>();
    return t;
}

GroundTruth GroundTruth::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

void GroundTruth::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << to_json().dump(2) << "\n";
}

}  // namespace dq
