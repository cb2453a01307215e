#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/anomaly.hpp"
#include "dq/assess.hpp"
#include "dq/dimension.hpp"
#include "dq/gbt.hpp"
#include "dq/lexicon.hpp"
#include "dq/table.hpp"
#include "dq/truth.hpp"

namespace dq::correct {

struct CorrectionConfig {
    double corr_thresh = 0.2;
    double we_thresh = 0.8;   // semantic-embedding similarity gate (conformity)
    double sim_thresh = 0.8;  // string-similarity gate (readability)
    int bins = 10;            // quantile bins for continuous targets
    std::map<std::string, std::vector<std::string>> feature_allow;  // per-target overrides
    std::map<std::string, std::vector<std::string>> feature_block;
    /// Stage order; Uniqueness and Consistency share the consolidation stage.
    std::vector<Dimension> order = {Dimension::Conformity, Dimension::Readability,
                                    Dimension::Uniqueness, Dimension::Accuracy,
                                    Dimension::Completeness};
    uint64_t seed = 1234;
    gbt::Params gbt;  // rounds 100, lr 0.1, depth 6, dropout 0.1
    std::size_t max_train_rows = 20000;
    int embed_dim = 32;

    nlohmann::json to_json() const;
    static CorrectionConfig from_json(const nlohmann::json& j);
};

struct ChangeLogEntry {
    std::size_t row = 0;
    std::string column;
    Dimension dimension = Dimension::Completeness;
    std::string old_value;
    std::string new_value;
    double confidence = 0.0;
    std::string model_id;
    bool has_bin = false;  // continuous prediction; new_value holds the written
    double bin_lo = 0.0;   // representative, bin_label the range
    double bin_hi = 0.0;
    std::string bin_label;
    bool output_row = false;  // row indexes the corrected table (merged rows)

    nlohmann::json to_json() const;
    static ChangeLogEntry from_json(const nlohmann::json& j);
};

struct CorrectionResult {
    Table corrected;
    std::vector<ChangeLogEntry> log;
    std::size_t neighborhood_fallbacks = 0;  // EmptyNeighborhood events
};

/// Features whose association with the target clears corr_thresh; when all
/// fall below it every feature is retained. Overrides apply last.
std::vector<std::string> correlated_features(const Table& t, const std::string& target,
                                             const CorrectionConfig& cfg);

/// Training rows for one anomaly under the per-dimension neighborhood rules.
/// `anomalous_cells` are (row, col) pairs flagged anywhere in the report;
/// sets *fell_back when the neighborhood was empty and all clean rows were
/// used instead.
std::vector<std::size_t> select_neighborhood(const Table& t, const anomaly::AnomalyRecord& a,
                                             const CorrectionConfig& cfg, const Lexicon* lexicon,
                                             const std::set<std::pair<std::size_t, std::size_t>>&
                                                 anomalous_cells,
                                             const std::vector<er::DuplicateCluster>& clusters,
                                             bool* fell_back = nullptr);

CorrectionResult correct_all(const Table& t, const anomaly::AnomalyReport& report,
                             const CorrectionConfig& cfg, const Lexicon* lexicon);

struct CorrectionEval {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    double error_rate = 0.0;
};

/// Grades corrections against pre-injection originals. Binned predictions
/// count correct when the original value lies inside the predicted bin.
CorrectionEval evaluate_correction(const std::vector<ChangeLogEntry>& log,
                                   const GroundTruth& truth);

struct QualityDelta {
    std::map<std::string, double> metric_deltas;  // after - before, percent points
    double improvement_rate = 0.0;                // global after - before

    nlohmann::json to_json() const;
};

QualityDelta quality_improvement(const assess::QualityReport& before,
                                 const assess::QualityReport& after);

void write_changelog(const std::string& path, const std::vector<ChangeLogEntry>& log);
std::vector<ChangeLogEntry> read_changelog(const std::string& path);

}  // namespace dq::correct
