#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/lexicon.hpp"
#include "dq/table.hpp"

namespace dq::assess {

// Stable metric / aspect keys used in configs, reports and JSON artifacts.
namespace metric {
inline constexpr const char* kCompleteness = "completeness";
inline constexpr const char* kUniqueness = "uniqueness";
inline constexpr const char* kConsistency = "consistency";
inline constexpr const char* kConformity = "conformity";
inline constexpr const char* kTimeliness = "timeliness";
inline constexpr const char* kVolatility = "volatility";
inline constexpr const char* kReadability = "readability";
inline constexpr const char* kEase = "ease_of_manipulation";
inline constexpr const char* kRelevancy = "relevancy";
inline constexpr const char* kSecurity = "security";
inline constexpr const char* kAccessibility = "accessibility";
inline constexpr const char* kIntegrity = "integrity";
}  // namespace metric

struct WeightConfig {
    std::map<std::string, int> field_factors;  // field -> relevance factor in [1,10]
    std::map<std::string, std::map<std::string, double>> metric_weights;  // aspect -> metric -> w
    std::map<std::string, double> aspect_weights;

    /// Metric and aspect weights as published (field factors left empty).
    static WeightConfig thesis_defaults();

    bool operator==(const WeightConfig&) const = default;

    nlohmann::json to_json() const;
    static WeightConfig from_json(const nlohmann::json& j);
};

/// weight_f = factor_f / sum(factors); exact in rational arithmetic.
std::map<std::string, double> field_weights(const std::map<std::string, int>& factors);

/// Rational form of the same computation for exactness checks:
/// numerators[f] / denominator.
struct FieldWeightsExact {
    std::map<std::string, long long> numerators;
    long long denominator = 0;
};
FieldWeightsExact field_weights_exact(const std::map<std::string, int>& factors);

struct SecurityChecklist {
    bool policy_compliance = false;
    bool transfer_protocols = false;
    bool threat_detection = false;
    bool encryption = false;
    bool documentation = false;
};

struct QualityReport {
    std::map<std::string, double> metric_scores;
    std::map<std::string, double> aspect_scores;
    double global_score = 0.0;
    WeightConfig weights_used;
    int64_t evaluated_at = 0;

    nlohmann::json to_json() const;
    static QualityReport from_json(const nlohmann::json& j);
};

using FieldWeights = std::map<std::string, double>;  // empty map = uniform

double completeness(const Table& t, const FieldWeights& weights = {});
double uniqueness(const Table& t);
double consistency(const Table& t, const std::vector<std::vector<std::size_t>>& clusters);
double conformity(const Table& t, const FieldWeights& weights = {});
double timeliness(const Table& t, int64_t now);
double volatility(const Table& t, int64_t now);
double readability(const Table& t, const Lexicon& lexicon);

/// Default orientation scores high when little cleaning was needed;
/// `literal_formula` reproduces the printed ratio instead.
double ease_of_manipulation(const Table& original, const Table& cleaned,
                            bool literal_formula = false);
double relevancy(const Table& t, const FieldWeights& weights = {});
double security(const SecurityChecklist& checklist);
double accessibility(const Table& t);
double integrity(const Table& original, const Table& processed, bool literal_formula = false);

/// Per-row scores backing the timeliness/volatility identity tests.
double timeliness_row(const RowMeta& m, int64_t now);
double volatility_row(const RowMeta& m, int64_t now);

std::map<std::string, double> aspect_scores(const std::map<std::string, double>& metric_scores,
                                            const WeightConfig& cfg);
double global_score(const std::map<std::string, double>& aspects, const WeightConfig& cfg);

}  // namespace dq::assess
