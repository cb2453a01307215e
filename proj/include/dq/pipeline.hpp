#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/anomaly.hpp"
#include "dq/assess.hpp"
#include "dq/correct.hpp"
#include "dq/lexicon.hpp"
#include "dq/synth.hpp"
#include "dq/table.hpp"
#include "dq/truth.hpp"

namespace dq::pipeline {

struct LexiconConfig {
    bool use_bundled = true;
    bool use_frequency = true;      // per-column frequent tokens become valid
    std::size_t min_count = 5;
    bool use_domain_pools = false;  // generator vocabulary (synthetic runs)
    std::vector<std::string> extra_words;
};

struct Config {
    std::map<std::string, DeclaredKind> schema;
    std::string meta_path;
    PreprocessOptions preprocess = default_preprocess();
    std::map<std::string, int> field_factors;  // empty = uniform field weights
    assess::WeightConfig weights = assess::WeightConfig::thesis_defaults();
    assess::SecurityChecklist security = {true, true, true, true, true};
    anomaly::DetectConfig detect;
    correct::CorrectionConfig correction;
    synth::InjectionSpec injection;
    std::size_t synth_rows = 1000;
    uint64_t synth_seed = 1;
    int64_t evaluated_at = synth::kDefaultNow;
    bool estimate_contamination = true;  // from a labeled subsample when truth exists
    double subsample_fraction = 0.1;
    LexiconConfig lexicon;

    static PreprocessOptions default_preprocess();
    nlohmann::json to_json() const;
    static Config from_json(const nlohmann::json& j);
    static Config load(const std::string& path);
};

Lexicon build_lexicon(const Table& preprocessed, const LexiconConfig& cfg);

/// Full quality report over one table: preprocesses, resolves duplicates for
/// the consistency metric, computes every metric the inputs support, and
/// aggregates aspects/global over the available ones.
assess::QualityReport assess_table(const Table& loaded, const Config& cfg,
                                   const Lexicon& lexicon);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct Artifacts {
    assess::QualityReport before;
    assess::QualityReport after;
    anomaly::AnomalyReport anomalies;
    std::vector<correct::ChangeLogEntry> changelog;
    Table preprocessed;
    Table corrected;
    nlohmann::json eval;  // detection + correction + quality deltas (needs truth)
    std::vector<StageTiming> timings;
};

/// assess -> detect -> correct -> re-assess -> evaluate. Truth may be null
/// (evaluation skipped). Errors carry the failing stage in their message.
Artifacts run_pipeline(const Table& loaded, const GroundTruth* truth, const Config& cfg);

/// Writes quality_before/after.json, anomalies.json, changes.jsonl,
/// corrected.csv, eval.json, manifest.json, and timings.json (the one file
/// excluded from byte-reproducibility).
void write_artifacts(const std::string& outdir, const Artifacts& artifacts, const Config& cfg);

/// Contamination estimates from a labeled subsample (every k-th row),
/// applied as expected counts / rates on the detect config.
void estimate_contamination_from_truth(anomaly::DetectConfig& detect, const Table& t,
                                       const GroundTruth& truth, double subsample_fraction);

void write_table_csv(const std::string& path, const Table& t);
void write_meta_sidecar(const std::string& path, const Table& t);

}  // namespace dq::pipeline
