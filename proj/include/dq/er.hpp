#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/table.hpp"
#include "dq/text.hpp"

namespace dq::er {

struct ErConfig {
    std::vector<std::string> key_fields;         // sorted-neighborhood key, in order
    int window = 10;                             // sliding window size
    std::vector<std::string> compare_fields;     // empty = all columns
    std::map<std::string, double> field_weights; // empty = uniform over compare_fields
    double auto_label_lo = 0.3;
    double auto_label_hi = 0.9;
    double target_recall = 0.95;                 // predicate coverage goal
    int max_block_rows = 200;                    // larger blocks degrade to chained pairs
    double date_horizon_days = 3650.0;
    int seed = 1;
    double guard_band = 0.02;                    // continual-learning F-score guard
    int classifier_epochs = 400;

    nlohmann::json to_json() const;
    static ErConfig from_json(const nlohmann::json& j);
};

struct CandidatePair {
    uint32_t row_a = 0;  // row_a < row_b
    uint32_t row_b = 0;
    std::vector<float> features;  // per compared field, in [0,1]
    double weighted_sim = 0.0;
};

struct LabeledSet {
    std::vector<CandidatePair> positives;
    std::vector<CandidatePair> negatives;
};

enum class PredicateKind { CommonTokens, SamePrefix, Exact };

struct Predicate {
    PredicateKind kind = PredicateKind::Exact;
    int param = 0;  // k for CommonTokens / SamePrefix
    std::string field;

    bool operator==(const Predicate&) const = default;
    std::string repr() const;
};

using PredicateConjunction = std::vector<Predicate>;  // all must hold; depth <= 3

struct MatchModel {
    std::vector<PredicateConjunction> predicates;
    std::vector<double> weights;  // one per compared field
    double bias = 0.0;
    double match_threshold = 0.5;
    int version = 0;
    std::vector<std::string> fields;  // feature order
    bool coverage_reached = true;     // learn_predicates hit target_recall

    double probability(const std::vector<float>& features) const;

    nlohmann::json to_json() const;
    static MatchModel from_json(const nlohmann::json& j);
};

using DuplicateCluster = std::vector<std::size_t>;  // sorted member rows, size >= 2

/// Precomputed per-row comparison state; build once per table.
class FeatureExtractor {
public:
    FeatureExtractor(const Table& t, const ErConfig& cfg);

    const std::vector<std::string>& fields() const { return fields_; }
    std::size_t rows() const { return rows_; }

    void fill_features(CandidatePair& pair) const;
    std::vector<float> features(std::size_t row_a, std::size_t row_b) const;
    double weighted(const std::vector<float>& features) const;

    /// Normalized (lowercase, symbol-stripped) text of a cell for keying.
    const std::string& normalized(std::size_t row, std::size_t field_idx) const;

private:
    enum class Repr { Missing, Number, Date, Text };
    struct FieldData {
        Repr repr_kind;  // per cell
        double num;
        int64_t ts;
        text::GramVector grams;
    };
    std::size_t rows_ = 0;
    std::vector<std::string> fields_;
    std::vector<double> weights_;
    std::vector<std::vector<FieldData>> data_;       // [field][row]
    std::vector<std::vector<std::string>> norm_;     // [field][row]
    std::vector<double> ranges_;                     // numeric column ranges
    double date_horizon_s_;
};

std::vector<CandidatePair> sorted_neighborhood(const Table& t, const FeatureExtractor& fx,
                                               const std::vector<std::string>& key_fields,
                                               int window);

LabeledSet auto_label(const std::vector<CandidatePair>& pairs, double lo, double hi);

std::vector<PredicateConjunction> learn_predicates(const Table& t, const FeatureExtractor& fx,
                                                   const LabeledSet& labeled,
                                                   const ErConfig& cfg, bool* coverage_reached);

/// Deterministic logistic fit plus threshold tuning on a held-out split.
/// `warm_start` seeds the weights for continual updates.
MatchModel train_classifier(const LabeledSet& labeled, int seed, int epochs = 400,
                            const MatchModel* warm_start = nullptr);

/// Full training pass: sorted neighborhood, auto-label, predicates, classifier.
MatchModel fit(const Table& t, const ErConfig& cfg);

std::vector<DuplicateCluster> resolve(const Table& t, const MatchModel& model,
                                      const ErConfig& cfg);

/// Match pairs surviving the classifier, before clustering. Exposed for the
/// anomaly-detection patterns which need pair-level candidates.
struct ResolveDetail {
    std::vector<CandidatePair> candidates;  // all pairs passing blocking
    std::vector<uint8_t> is_match;          // per candidate
    std::vector<DuplicateCluster> clusters;
};
ResolveDetail resolve_detail(const Table& t, const MatchModel& model, const ErConfig& cfg);

enum class MergeStrategy { MostReliable, MostComplete, Fused };

struct MergeResult {
    std::vector<Cell> merged;             // one cell per column
    std::vector<std::size_t> retired;     // all cluster members
};

MergeResult merge_cluster(const Table& t, const DuplicateCluster& cluster, MergeStrategy strategy,
                          const std::map<std::size_t, int>* source_rank = nullptr);

/// Classifier state plus the rolling buffers the online loop needs.
struct OnlineModel {
    MatchModel model;
    std::vector<std::pair<std::vector<float>, uint8_t>> replay;   // training buffer
    std::vector<std::pair<std::vector<float>, uint8_t>> holdout;  // rolling eval buffer
    double holdout_f = 0.0;
};

struct ContinualUpdateResult {
    OnlineModel updated;
    bool accepted = false;     // false: guard band tripped, previous model kept
    double f_before = 0.0;
    double f_after = 0.0;
};

ContinualUpdateResult continual_update(const OnlineModel& current, const Table& batch,
                                       const std::vector<std::pair<std::size_t, std::size_t>>&
                                           operational_matches,
                                       const ErConfig& cfg);

/// Pairwise precision/recall/F of predicted clusters against true pairs.
struct PairScore {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
};
PairScore pairwise_score(const std::vector<DuplicateCluster>& predicted,
                         const std::vector<std::pair<std::size_t, std::size_t>>& true_pairs);

nlohmann::json clusters_to_json(const std::vector<DuplicateCluster>& clusters, int model_version);

}  // namespace dq::er
