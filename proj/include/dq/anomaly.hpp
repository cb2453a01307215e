#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/dimension.hpp"
#include "dq/eif.hpp"
#include "dq/er.hpp"
#include "dq/lexicon.hpp"
#include "dq/table.hpp"
#include "dq/truth.hpp"

namespace dq::anomaly {

/// Maps one pattern-matrix row back to its data location: a (table row,
/// column) cell or a (pair, field) comparison.
struct PatternLocator {
    uint32_t row_a = 0;
    uint32_t row_b = 0;      // pair partner; unused for cell locators
    int32_t column = -1;     // column index; -1 for whole-record locators
    bool is_pair = false;
};

struct DatasetPattern {
    Dimension dimension = Dimension::Accuracy;
    std::size_t dims = 1;
    std::vector<double> matrix;  // row-major, locators.size() x dims
    std::vector<PatternLocator> locators;
    std::string column_name;  // set for per-column patterns
    bool binary = false;

    std::size_t rows() const { return locators.size(); }
};

struct AnomalyRecord {
    uint32_t row = 0;
    int32_t row_b = -1;  // pair partner when >= 0
    std::string column;  // empty for whole-record anomalies
    Dimension dimension = Dimension::Completeness;
    double score = 100.0;  // percent in (0, 100]
};

struct AnomalyReport {
    std::vector<AnomalyRecord> records;
    std::map<std::string, double> metric_scores;  // S_M keyed by dimension name
    double global_score = 0.0;                    // S_A
    std::map<std::string, double> weights;
    std::vector<er::DuplicateCluster> clusters;  // duplicate groups for correction
    std::string snapshot_id;
    nlohmann::json params;

    nlohmann::json to_json() const;
    static AnomalyReport from_json(const nlohmann::json& j);
};

struct DetectConfig {
    std::map<std::string, double> contamination = {
        {"accuracy", 0.01}, {"uniqueness", 0.01}, {"consistency", 0.05}};
    /// Absolute expected-anomaly counts; when present for a dimension they
    /// override the contamination rate (used with subsample estimates).
    std::map<std::string, std::size_t> expected_counts;
    eif::Params forest;                         // 100 trees, sample 265
    std::map<std::string, double> metric_weights;  // S_A weights; empty = equal
    bool literal_eq2 = false;
    bool binary_bypass = true;        // exact selection for binary patterns
    bool multivariate_accuracy = false;
    er::ErConfig er;
    bool run_er = true;  // uniqueness/consistency need candidate pairs
    /// Lenient formats used only by the accuracy pattern when reading date
    /// content out of nonconforming text cells.
    std::vector<timeparse::Format> lenient_date_formats = timeparse::default_formats();

    nlohmann::json to_json() const;
    static DetectConfig from_json(const nlohmann::json& j);
};

// ---- pattern generation -------------------------------------------------

DatasetPattern pattern_completeness(const Table& t);
DatasetPattern pattern_conformity(const Table& t);
DatasetPattern pattern_readability(const Table& t, const Lexicon& lexicon);

/// One z-scored pattern per Numeric/Date column; constant columns skipped
/// (their names land in `skipped`). Date content is parsed leniently so
/// wrong-format date text still contributes its time value.
std::vector<DatasetPattern> pattern_accuracy(const Table& t,
                                             const std::vector<timeparse::Format>& lenient_formats,
                                             std::vector<std::string>* skipped = nullptr);

/// Weighted similarity per candidate pair (candidates from blocking).
DatasetPattern pattern_uniqueness(const Table& t, const std::vector<er::CandidatePair>& candidates);

/// Per-field similarity rows for the flagged duplicate pairs.
DatasetPattern pattern_consistency(const Table& t, const er::FeatureExtractor& fx,
                                   const std::vector<er::CandidatePair>& flagged_pairs);

// ---- detection ----------------------------------------------------------

/// Full six-dimension detection. `lexicon` may be null (readability skipped,
/// mirroring data where spell-checking does not apply).
AnomalyReport detect(const Table& t, const DetectConfig& cfg, const Lexicon* lexicon);

/// Eq. (1): mean of the records' scores; 0 when empty.
double metric_anomaly_score(const std::vector<AnomalyRecord>& records);

/// Eq. (2). Default: sum(w_i S_i) / sum(w_i). literal_eq2 divides by
/// sum(S_i) as printed.
double global_anomaly_score(const std::map<std::string, double>& metric_scores,
                            const std::map<std::string, double>& weights, bool literal_eq2 = false);

// ---- evaluation ---------------------------------------------------------

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f_score = 0.0, accuracy = 0.0;
    bool precision_defined = true;  // false when no positives were predicted
    std::size_t population() const { return tp + fp + tn + fn; }
};

struct DetectionEval {
    std::map<std::string, Confusion> per_dimension;
    Confusion overall;

    nlohmann::json to_json() const;
};

/// Cell-granular confusion per dimension (pairwise for uniqueness) against
/// the injection ground truth.
DetectionEval evaluate_detection(const AnomalyReport& report, const GroundTruth& truth,
                                 const Table& t);

/// Same evaluation from the table shape alone (the report's params carry it),
/// so `eval` runs off artifacts without reloading data.
DetectionEval evaluate_detection(const AnomalyReport& report, const GroundTruth& truth,
                                 std::size_t row_count, const std::vector<std::string>& columns);

Confusion make_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

}  // namespace dq::anomaly
