#include "dq/assess.hpp"

#include <algorithm>
#include <unordered_set>

#include "dq/error.hpp"
#include "dq/text.hpp"
#include "dq/timeparse.hpp"

namespace dq::assess {

namespace {

void require_nonempty(const Table& t) {
    if (t.row_count() == 0 || t.column_count() == 0)
        fail(ErrorCode::EmptyTable, "metric needs at least one row and column");
}

// Resolves the weights map against the table's columns; empty input means
// uniform weights over all columns.
std::vector<double> resolve_weights(const Table& t, const FieldWeights& weights) {
    std::vector<double> w(t.column_count(), 0.0);
    if (weights.empty()) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(t.column_count()));
        return w;
    }
    for (std::size_t i = 0; i < t.column_count(); ++i) {
        auto it = weights.find(t.column(i).name);
        if (it == weights.end())
            fail(ErrorCode::MissingMetric, "no weight for field '" + t.column(i).name + "'");
        w[i] = it->second;
    }
    return w;
}

double diff_ratio_score(const Table& a, const Table& b, bool literal) {
    std::size_t total = a.cell_count();
    if (total == 0) return literal ? 0.0 : 100.0;
    double ratio = static_cast<double>(diff_count(a, b)) / static_cast<double>(total);
    return literal ? 100.0 * ratio : 100.0 * (1.0 - ratio);
}

}  // namespace

WeightConfig WeightConfig::thesis_defaults() {
    WeightConfig cfg;
    cfg.metric_weights = {
        {"reliability", {{metric::kIntegrity, 0.7}, {metric::kVolatility, 0.3}}},
        {"availability", {{metric::kSecurity, 0.8}, {metric::kAccessibility, 0.2}}},
        {"pertinence", {{metric::kTimeliness, 0.7}, {metric::kUniqueness, 0.3}}},
        {"validity",
         {{metric::kConsistency, 0.4}, {metric::kConformity, 0.4}, {metric::kReadability, 0.2}}},
        {"usability",
         {{metric::kCompleteness, 0.5}, {metric::kRelevancy, 0.3}, {metric::kEase, 0.2}}},
    };
    cfg.aspect_weights = {{"reliability", 0.3},
                          {"availability", 0.1},
                          {"pertinence", 0.1},
                          {"validity", 0.3},
                          {"usability", 0.2}};
    return cfg;
}

nlohmann::json WeightConfig::to_json() const {
    nlohmann::json j;
    j["field_factors"] = field_factors;
    j["metric_weights"] = metric_weights;
    j["aspect_weights"] = aspect_weights;
    return j;
}

WeightConfig WeightConfig::from_json(const nlohmann::json& j) {
    WeightConfig cfg;
    if (j.contains("field_factors"))
        cfg.field_factors = j["field_factors"].get<std::map<std::string, int>>();
    if (j.contains("metric_weights"))
        cfg.metric_weights =
            j["metric_weights"].get<std::map<std::string, std::map<std::string, double>>>();
    if (j.contains("aspect_weights"))
        cfg.aspect_weights = j["aspect_weights"].get<std::map<std::string, double>>();
    return cfg;
}

std::map<std::string, double> field_weights(const std::map<std::string, int>& factors) {
    FieldWeightsExact exact = field_weights_exact(factors);
    std::map<std::string, double> out;
    for (const auto& [field, num] : exact.numerators)
        out[field] = static_cast<double>(num) / static_cast<double>(exact.denominator);
    return out;
}

FieldWeightsExact field_weights_exact(const std::map<std::string, int>& factors) {
    if (factors.empty()) fail(ErrorCode::BadFactor, "at least one field required");
    FieldWeightsExact exact;
    for (const auto& [field, factor] : factors) {
        if (factor < 1 || factor > 10)
            fail(ErrorCode::BadFactor, "factor " + std::to_string(factor) + " for '" + field +
                                           "' outside [1,10]");
        exact.numerators[field] = factor;
        exact.denominator += factor;
    }
    return exact;
}

nlohmann::json QualityReport::to_json() const {
    nlohmann::json j;
    j["metrics"] = metric_scores;
    j["aspects"] = aspect_scores;
    j["global"] = global_score;
    j["weights"] = weights_used.to_json();
    j["evaluated_at"] = timeparse::format_iso(evaluated_at);
    return j;
}

QualityReport QualityReport::from_json(const nlohmann::json& j) {
    QualityReport r;
    r.metric_scores = j.at("metrics").get<std::map<std::string, double>>();
    r.aspect_scores = j.at("aspects").get<std::map<std::string, double>>();
    r.global_score = j.at("global").get<double>();
    r.weights_used = WeightConfig::from_json(j.at("weights"));
    if (auto ts = timeparse::parse_iso(j.at("evaluated_at").get<std::string>()))
        r.evaluated_at = *ts;
    return r;
}

double completeness(const Table& t, const FieldWeights& weights) {
    require_nonempty(t);
    auto w = resolve_weights(t, weights);
    double score = 0.0;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        const auto& cells = t.column(c).cells;
        std::size_t present = 0;
        for (const auto& cell : cells)
            if (!cell.missing()) ++present;
        double field_score = 100.0 * static_cast<double>(present) / static_cast<double>(cells.size());
        score += w[c] * field_score;
    }
    return score;
}

double uniqueness(const Table& t) {
    require_nonempty(t);
    std::unordered_set<std::string> seen;
    seen.reserve(t.row_count() * 2);
    std::string key;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        key.clear();
        for (std::size_t c = 0; c < t.column_count(); ++c) {
            const Cell& cell = t.at(r, c);
            key.push_back(static_cast<char>('0' + static_cast<int>(cell.tag)));
            key += cell.content();
            key.push_back('\x1f');
        }
        seen.insert(key);
    }
    return 100.0 * static_cast<double>(seen.size()) / static_cast<double>(t.row_count());
}

double consistency(const Table& t, const std::vector<std::vector<std::size_t>>& clusters) {
    std::size_t agree = 0, total = 0;
    for (const auto& cluster : clusters) {
        for (std::size_t i = 0; i < cluster.size(); ++i) {
            for (std::size_t j = i + 1; j < cluster.size(); ++j) {
                if (cluster[i] >= t.row_count() || cluster[j] >= t.row_count())
                    fail(ErrorCode::BadClusterIndex, "cluster row index out of range");
                for (std::size_t c = 0; c < t.column_count(); ++c) {
                    ++total;
                    if (cell_equal(t.at(cluster[i], c), t.at(cluster[j], c))) ++agree;
                }
            }
        }
    }
    if (total == 0) return 100.0;
    return 100.0 * static_cast<double>(agree) / static_cast<double>(total);
}

double conformity(const Table& t, const FieldWeights& weights) {
    require_nonempty(t);
    auto w = resolve_weights(t, weights);
    double score = 0.0;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        std::size_t conforming = 0, considered = 0;
        DeclaredKind declared = t.column(c).declared_kind;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            ValueKind k = t.kind_at(r, c);
            if (k == ValueKind::Missing) continue;
            ++considered;
            bool ok = (declared == DeclaredKind::Numeric && k == ValueKind::Numeric) ||
                      (declared == DeclaredKind::String && k == ValueKind::String) ||
                      (declared == DeclaredKind::Date && k == ValueKind::Date);
            if (ok) ++conforming;
        }
        double field_score =
            considered == 0 ? 100.0
                            : 100.0 * static_cast<double>(conforming) / static_cast<double>(considered);
        score += w[c] * field_score;
    }
    return score;
}

double timeliness_row(const RowMeta& m, int64_t now) {
    if (m.created_at > m.modified_at || m.modified_at > now)
        fail(ErrorCode::BadTimestamp, "row_meta outside created <= modified <= now");
    int64_t age = now - m.created_at;
    int64_t staleness = now - m.modified_at;
    return 100.0 * static_cast<double>(staleness) / static_cast<double>(age);
}

double volatility_row(const RowMeta& m, int64_t now) {
    // (created - modified)/(now - created) equals timeliness - 100 exactly:
    // created - modified = (now - modified) - (now - created).
    return timeliness_row(m, now) - 100.0;
}

namespace {

double mean_over_rows(const Table& t, int64_t now, double (*row_fn)(const RowMeta&, int64_t)) {
    if (!t.has_row_meta()) fail(ErrorCode::MissingRowMeta, "metric needs row_meta");
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& m : t.row_meta()) {
        if (now == m.created_at) continue;  // zero age, skipped
        sum += row_fn(m, now);
        ++counted;
    }
    if (counted == 0) fail(ErrorCode::DegenerateAge, "all rows created at evaluation time");
    return sum / static_cast<double>(counted);
}

}  // namespace

double timeliness(const Table& t, int64_t now) { return mean_over_rows(t, now, timeliness_row); }

double volatility(const Table& t, int64_t now) { return mean_over_rows(t, now, volatility_row); }

double readability(const Table& t, const Lexicon& lexicon) {
    if (lexicon.empty()) fail(ErrorCode::EmptyLexicon, "readability needs a lexicon");
    std::size_t text_cells = 0, readable_cells = 0;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        for (const auto& cell : t.column(c).cells) {
            if (cell.tag != Cell::Tag::Text) continue;
            ++text_cells;
            if (lexicon.readable(cell.text)) ++readable_cells;
        }
    }
    if (text_cells == 0) return 100.0;
    return 100.0 * static_cast<double>(readable_cells) / static_cast<double>(text_cells);
}

double ease_of_manipulation(const Table& original, const Table& cleaned, bool literal_formula) {
    return diff_ratio_score(original, cleaned, literal_formula);
}

double relevancy(const Table& t, const FieldWeights& weights) {
    require_nonempty(t);
    auto w = resolve_weights(t, weights);
    int64_t total_access = 0;
    for (const auto& col : t.columns()) total_access += col.access_count;
    if (total_access <= 0) fail(ErrorCode::NoAccessData, "no field access counts recorded");
    double score = 0.0;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        double field_score = 100.0 * static_cast<double>(t.column(c).access_count) /
                             static_cast<double>(total_access);
        score += w[c] * field_score;
    }
    return score;
}

double security(const SecurityChecklist& c) {
    int count = static_cast<int>(c.policy_compliance) + static_cast<int>(c.transfer_protocols) +
                static_cast<int>(c.threat_detection) + static_cast<int>(c.encryption) +
                static_cast<int>(c.documentation);
    return 20.0 * count;
}

double accessibility(const Table& t) {
    require_nonempty(t);
    std::size_t accessible_cells = 0;
    for (const auto& col : t.columns())
        if (col.accessible) accessible_cells += col.cells.size();
    return 100.0 * static_cast<double>(accessible_cells) / static_cast<double>(t.cell_count());
}

double integrity(const Table& original, const Table& processed, bool literal_formula) {
    return diff_ratio_score(original, processed, literal_formula);
}

std::map<std::string, double> aspect_scores(const std::map<std::string, double>& metric_scores,
                                            const WeightConfig& cfg) {
    std::map<std::string, double> out;
    for (const auto& [aspect, weights] : cfg.metric_weights) {
        double num = 0.0, den = 0.0;
        for (const auto& [metric_name, w] : weights) {
            auto it = metric_scores.find(metric_name);
            if (it == metric_scores.end())
                fail(ErrorCode::MissingMetric, "aspect '" + aspect + "' needs metric '" +
                                                   metric_name + "'");
            num += w * it->second;
            den += w;
        }
        if (den <= 0.0) fail(ErrorCode::AllZeroWeights, "aspect '" + aspect + "'");
        out[aspect] = num / den;
    }
    return out;
}

double global_score(const std::map<std::string, double>& aspects, const WeightConfig& cfg) {
    double num = 0.0, den = 0.0;
    for (const auto& [aspect, w] : cfg.aspect_weights) {
        auto it = aspects.find(aspect);
        if (it == aspects.end()) fail(ErrorCode::MissingAspect, "aspect '" + aspect + "' missing");
        num += w * it->second;
        den += w;
    }
    if (den <= 0.0) fail(ErrorCode::AllZeroWeights, "aspect weights sum to zero");
    return num / den;
}

}  // namespace dq::assess
