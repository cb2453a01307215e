#include "dq/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dq/csv.hpp"
#include "dq/er.hpp"
#include "dq/error.hpp"

namespace dq::pipeline {

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
    template <typename Fn>
    auto time(const std::string& stage, Fn&& fn) -> decltype(fn()) {
        auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                record(stage, start);
            } else {
                auto result = fn();
                record(stage, start);
                return result;
            }
        } catch (const DqError& e) {
            throw DqError(e.code(), "stage '" + stage + "': " + e.what());
        }
    }

private:
    void record(const std::string& stage,
                std::chrono::steady_clock::time_point start) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        out_.push_back({stage, secs});
    }
    std::vector<StageTiming>& out_;
};

std::map<std::string, double> resolved_field_weights(const Table& t,
                                                     const std::map<std::string, int>& factors) {
    if (factors.empty()) return {};
    for (const auto& col : t.columns())
        if (!factors.count(col.name))
            fail(ErrorCode::BadFactor, "field factor missing for column '" + col.name + "'");
    return assess::field_weights(factors);
}

// Aspect/global aggregation over the metrics that were actually computable.
void aggregate_available(assess::QualityReport& report, const assess::WeightConfig& weights) {
    assess::WeightConfig filtered = weights;
    for (auto it = filtered.metric_weights.begin(); it != filtered.metric_weights.end();) {
        auto& [aspect, metric_map] = *it;
        for (auto mit = metric_map.begin(); mit != metric_map.end();) {
            if (!report.metric_scores.count(mit->first)) mit = metric_map.erase(mit);
            else ++mit;
        }
        if (metric_map.empty()) {
            filtered.aspect_weights.erase(aspect);
            it = filtered.metric_weights.erase(it);
        } else {
            ++it;
        }
    }
    report.aspect_scores = assess::aspect_scores(report.metric_scores, filtered);
    report.global_score = assess::global_score(report.aspect_scores, filtered);
    report.weights_used = weights;
}

}  // namespace

PreprocessOptions Config::default_preprocess() {
    PreprocessOptions p;
    p.lowercase = true;
    p.strip_symbols = true;
    p.normalize_nulls = true;
    return p;
}

nlohmann::json Config::to_json() const {
    nlohmann::json j;
    nlohmann::json schema_json = nlohmann::json::object();
    for (const auto& [name, kind] : schema) schema_json[name] = to_string(kind);
    j["schema"] = schema_json;
    j["meta_path"] = meta_path;
    j["preprocess"] = {{"lowercase", preprocess.lowercase},
                       {"strip_symbols", preprocess.strip_symbols},
                       {"remove_stopwords", preprocess.remove_stopwords},
                       {"normalize_nulls", preprocess.normalize_nulls},
                       {"minmax_scale", preprocess.minmax_scale},
                       {"free_text_columns", preprocess.free_text_columns}};
    j["field_factors"] = field_factors;
    j["weights"] = weights.to_json();
    j["security"] = {{"policy_compliance", security.policy_compliance},
                     {"transfer_protocols", security.transfer_protocols},
                     {"threat_detection", security.threat_detection},
                     {"encryption", security.encryption},
                     {"documentation", security.documentation}};
    j["detect"] = detect.to_json();
    j["correction"] = correction.to_json();
    j["injection"] = injection.to_json();
    j["synth"] = {{"rows", synth_rows}, {"seed", synth_seed}};
    j["evaluated_at"] = timeparse::format_iso(evaluated_at);
    j["estimate_contamination"] = estimate_contamination;
    j["subsample_fraction"] = subsample_fraction;
    j["lexicon"] = {{"use_bundled", lexicon.use_bundled},
                    {"use_frequency", lexicon.use_frequency},
                    {"min_count", lexicon.min_count},
                    {"use_domain_pools", lexicon.use_domain_pools},
                    {"extra_words", lexicon.extra_words}};
    return j;
}

Config Config::from_json(const nlohmann::json& j) {
    Config c;
    if (j.contains("schema")) {
        for (const auto& [name, kind_name] : j["schema"].items()) {
            auto kind = declared_kind_from_name(kind_name.get<std::string>());
            if (!kind) fail(ErrorCode::BadConfig, "unknown declared kind for '" + name + "'");
            c.schema[name] = *kind;
        }
    }
    if (j.contains("meta_path")) c.meta_path = j["meta_path"].get<std::string>();
    if (j.contains("preprocess")) {
        const auto& p = j["preprocess"];
        if (p.contains("lowercase")) c.preprocess.lowercase = p["lowercase"].get<bool>();
        if (p.contains("strip_symbols"))
            c.preprocess.strip_symbols = p["strip_symbols"].get<bool>();
        if (p.contains("remove_stopwords"))
            c.preprocess.remove_stopwords = p["remove_stopwords"].get<bool>();
        if (p.contains("normalize_nulls"))
            c.preprocess.normalize_nulls = p["normalize_nulls"].get<bool>();
        if (p.contains("minmax_scale")) c.preprocess.minmax_scale = p["minmax_scale"].get<bool>();
        if (p.contains("free_text_columns"))
            c.preprocess.free_text_columns =
                p["free_text_columns"].get<std::set<std::string>>();
    }
    if (j.contains("field_factors"))
        c.field_factors = j["field_factors"].get<std::map<std::string, int>>();
    if (j.contains("weights")) c.weights = assess::WeightConfig::from_json(j["weights"]);
    if (j.contains("security")) {
        const auto& s = j["security"];
        auto get = [&s](const char* key, bool fallback) {
            return s.contains(key) ? s[key].get<bool>() : fallback;
        };
        c.security.policy_compliance = get("policy_compliance", true);
        c.security.transfer_protocols = get("transfer_protocols", true);
        c.security.threat_detection = get("threat_detection", true);
        c.security.encryption = get("encryption", true);
        c.security.documentation = get("documentation", true);
    }
    if (j.contains("detect")) c.detect = anomaly::DetectConfig::from_json(j["detect"]);
    if (j.contains("correction"))
        c.correction = correct::CorrectionConfig::from_json(j["correction"]);
    if (j.contains("injection")) c.injection = synth::InjectionSpec::from_json(j["injection"]);
    if (j.contains("synth")) {
        if (j["synth"].contains("rows")) c.synth_rows = j["synth"]["rows"].get<std::size_t>();
        if (j["synth"].contains("seed")) c.synth_seed = j["synth"]["seed"].get<uint64_t>();
    }
    if (j.contains("evaluated_at")) {
        auto ts = timeparse::parse_iso(j["evaluated_at"].get<std::string>());
        if (!ts) fail(ErrorCode::BadConfig, "evaluated_at must be ISO-8601");
        c.evaluated_at = *ts;
    }
    if (j.contains("estimate_contamination"))
        c.estimate_contamination = j["estimate_contamination"].get<bool>();
    if (j.contains("subsample_fraction"))
        c.subsample_fraction = j["subsample_fraction"].get<double>();
    if (j.contains("lexicon")) {
        const auto& l = j["lexicon"];
        if (l.contains("use_bundled")) c.lexicon.use_bundled = l["use_bundled"].get<bool>();
        if (l.contains("use_frequency")) c.lexicon.use_frequency = l["use_frequency"].get<bool>();
        if (l.contains("min_count")) c.lexicon.min_count = l["min_count"].get<std::size_t>();
        if (l.contains("use_domain_pools"))
            c.lexicon.use_domain_pools = l["use_domain_pools"].get<bool>();
        if (l.contains("extra_words"))
            c.lexicon.extra_words = l["extra_words"].get<std::vector<std::string>>();
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadConfig, std::string("config parse: ") + e.what());
    }
    return from_json(j);
}

Lexicon build_lexicon(const Table& preprocessed, const LexiconConfig& cfg) {
    Lexicon lex;
    if (cfg.use_bundled) lex = Lexicon::bundled();
    if (cfg.use_domain_pools) lex.add_words(synth::domain_words());
    lex.add_words(cfg.extra_words);
    if (cfg.use_frequency)
        for (const auto& col : preprocessed.columns())
            if (col.declared_kind == DeclaredKind::String)
                lex.add_column_frequent(col, cfg.min_count);
    return lex;
}

assess::QualityReport assess_table(const Table& loaded, const Config& cfg,
                                   const Lexicon& lexicon) {
    Table preprocessed = preprocess(loaded, cfg.preprocess);
    assess::QualityReport report;
    report.evaluated_at = cfg.evaluated_at;
    auto weights = resolved_field_weights(preprocessed, cfg.field_factors);

    report.metric_scores[assess::metric::kCompleteness] =
        assess::completeness(preprocessed, weights);
    report.metric_scores[assess::metric::kUniqueness] = assess::uniqueness(preprocessed);
    report.metric_scores[assess::metric::kConformity] = assess::conformity(preprocessed, weights);
    report.metric_scores[assess::metric::kAccessibility] = assess::accessibility(preprocessed);
    report.metric_scores[assess::metric::kEase] =
        assess::ease_of_manipulation(loaded, preprocessed);
    report.metric_scores[assess::metric::kIntegrity] = assess::integrity(loaded, preprocessed);
    report.metric_scores[assess::metric::kSecurity] = assess::security(cfg.security);
    if (!lexicon.empty())
        report.metric_scores[assess::metric::kReadability] =
            assess::readability(preprocessed, lexicon);
    if (preprocessed.has_row_meta()) {
        report.metric_scores[assess::metric::kTimeliness] =
            assess::timeliness(preprocessed, cfg.evaluated_at);
        report.metric_scores[assess::metric::kVolatility] =
            assess::volatility(preprocessed, cfg.evaluated_at);
    }
    {
        int64_t total_access = 0;
        for (const auto& col : preprocessed.columns()) total_access += col.access_count;
        if (total_access > 0)
            report.metric_scores[assess::metric::kRelevancy] =
                assess::relevancy(preprocessed, weights);
    }
    // consistency needs duplicate clusters from entity resolution
    if (cfg.detect.run_er && !cfg.detect.er.key_fields.empty() &&
        preprocessed.row_count() >= static_cast<std::size_t>(cfg.detect.er.window)) {
        std::vector<er::DuplicateCluster> clusters;
        try {
            er::MatchModel model = er::fit(preprocessed, cfg.detect.er);
            clusters = er::resolve(preprocessed, model, cfg.detect.er);
        } catch (const DqError&) {
            // no duplicate signal; no clusters
        }
        report.metric_scores[assess::metric::kConsistency] =
            assess::consistency(preprocessed, clusters);
    }
    aggregate_available(report, cfg.weights);
    return report;
}

void estimate_contamination_from_truth(anomaly::DetectConfig& detect, const Table& t,
                                       const GroundTruth& truth, double subsample_fraction) {
    if (subsample_fraction <= 0.0 || subsample_fraction > 1.0)
        fail(ErrorCode::BadConfig, "subsample_fraction must lie in (0, 1]");
    std::size_t n = t.row_count();
    if (n == 0) return;
    std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                      std::llround(1.0 / subsample_fraction)));
    std::size_t sampled_rows = 0;
    for (std::size_t r = 0; r < n; r += stride) ++sampled_rows;
    double scale = static_cast<double>(n) / static_cast<double>(sampled_rows);

    std::size_t numeric_cols = 0;
    for (const auto& col : t.columns())
        if (col.declared_kind != DeclaredKind::String) ++numeric_cols;

    std::size_t outliers = 0, dup_rows = 0, conflicts = 0;
    for (const auto& e : truth.entries) {
        if (e.row % stride != 0) continue;
        if (e.dimension == Dimension::Accuracy) ++outliers;
        if (e.dimension == Dimension::Consistency) ++conflicts;
    }
    for (const auto& [dup, src] : truth.duplicate_map)
        if (dup % stride == 0) ++dup_rows;

    if (numeric_cols > 0) {
        double numeric_cells_sampled =
            static_cast<double>(sampled_rows) * static_cast<double>(numeric_cols);
        detect.contamination["accuracy"] =
            numeric_cells_sampled > 0 ? static_cast<double>(outliers) / numeric_cells_sampled
                                      : 0.0;
        detect.expected_counts.erase("accuracy");
    }
    detect.expected_counts["uniqueness"] =
        static_cast<std::size_t>(std::llround(static_cast<double>(dup_rows) * scale));
    detect.expected_counts["consistency"] =
        static_cast<std::size_t>(std::llround(static_cast<double>(conflicts) * scale));
}

namespace {

nlohmann::json binary_recheck(const Table& corrected, const Lexicon& lexicon) {
    std::size_t missing = 0, nonconforming = 0, misspelled = 0;
    for (std::size_t c = 0; c < corrected.column_count(); ++c) {
        DeclaredKind declared = corrected.column(c).declared_kind;
        for (std::size_t r = 0; r < corrected.row_count(); ++r) {
            ValueKind k = corrected.kind_at(r, c);
            if (k == ValueKind::Missing) {
                ++missing;
                continue;
            }
            bool ok = (declared == DeclaredKind::Numeric && k == ValueKind::Numeric) ||
                      (declared == DeclaredKind::String && k == ValueKind::String) ||
                      (declared == DeclaredKind::Date && k == ValueKind::Date);
            if (!ok) ++nonconforming;
            const Cell& cell = corrected.at(r, c);
            if (!lexicon.empty() && cell.tag == Cell::Tag::Text && !lexicon.readable(cell.text))
                ++misspelled;
        }
    }
    return {{"completeness", missing}, {"conformity", nonconforming},
            {"readability", misspelled}};
}

}  // namespace

Artifacts run_pipeline(const Table& loaded, const GroundTruth* truth, const Config& cfg) {
    Artifacts artifacts;
    StageClock clock(artifacts.timings);

    artifacts.preprocessed = clock.time("preprocess", [&] {
        return preprocess(loaded, cfg.preprocess);
    });
    Lexicon lexicon = build_lexicon(artifacts.preprocessed, cfg.lexicon);

    artifacts.before = clock.time("assess", [&] { return assess_table(loaded, cfg, lexicon); });

    anomaly::DetectConfig detect_cfg = cfg.detect;
    if (truth && cfg.estimate_contamination)
        estimate_contamination_from_truth(detect_cfg, artifacts.preprocessed, *truth,
                                          cfg.subsample_fraction);
    artifacts.anomalies = clock.time("detect", [&] {
        return anomaly::detect(artifacts.preprocessed, detect_cfg,
                               lexicon.empty() ? nullptr : &lexicon);
    });

    auto correction = clock.time("correct", [&] {
        return correct::correct_all(artifacts.preprocessed, artifacts.anomalies, cfg.correction,
                                    lexicon.empty() ? nullptr : &lexicon);
    });
    artifacts.corrected = std::move(correction.corrected);
    artifacts.changelog = std::move(correction.log);

    artifacts.after = clock.time("reassess", [&] {
        return assess_table(artifacts.corrected, cfg, lexicon);
    });

    clock.time("evaluate", [&] {
        nlohmann::json eval;
        eval["post_correction_binary_counts"] = binary_recheck(artifacts.corrected, lexicon);
        eval["neighborhood_fallbacks"] = correction.neighborhood_fallbacks;
        auto delta = correct::quality_improvement(artifacts.before, artifacts.after);
        eval["quality_delta"] = delta.to_json();
        if (truth) {
            auto detection = anomaly::evaluate_detection(artifacts.anomalies, *truth,
                                                         artifacts.preprocessed);
            eval["detection"] = detection.to_json();
            auto correction_eval = correct::evaluate_correction(artifacts.changelog, *truth);
            eval["correction"] = {{"correct", correction_eval.correct},
                                  {"total", correction_eval.total},
                                  {"accuracy", correction_eval.accuracy},
                                  {"error_rate", correction_eval.error_rate}};
        }
        eval["quality_before"] = artifacts.before.to_json();
        eval["quality_after"] = artifacts.after.to_json();
        artifacts.eval = std::move(eval);
    });
    return artifacts;
}

void write_table_csv(const std::string& path, const Table& t) {
    csv::Document doc;
    for (const auto& col : t.columns()) doc.header.push_back(col.name);
    doc.rows.resize(t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        doc.rows[r].reserve(t.column_count());
        for (std::size_t c = 0; c < t.column_count(); ++c)
            doc.rows[r].push_back(t.at(r, c).content());
    }
    csv::write_file(path, doc);
}

void write_meta_sidecar(const std::string& path, const Table& t) {
    nlohmann::json j;
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& col : t.columns())
        fields[col.name] = {{"access_count", col.access_count}, {"accessible", col.accessible}};
    j["fields"] = fields;
    if (t.has_row_meta()) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& m : t.row_meta())
            rows.push_back({{"created_at", timeparse::format_iso(m.created_at)},
                            {"modified_at", timeparse::format_iso(m.modified_at)}});
        j["rows"] = rows;
    }
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_artifacts(const std::string& outdir, const Artifacts& artifacts, const Config& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto path = [&outdir](const char* name) { return (fs::path(outdir) / name).string(); };

    auto dump = [](const std::string& file, const nlohmann::json& j) {
        std::ofstream out(file, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + file);
        out << j.dump(2) << "\n";
    };
    dump(path("quality_before.json"), artifacts.before.to_json());
    dump(path("quality_after.json"), artifacts.after.to_json());
    dump(path("anomalies.json"), artifacts.anomalies.to_json());
    correct::write_changelog(path("changes.jsonl"), artifacts.changelog);
    write_table_csv(path("corrected.csv"), artifacts.corrected);
    dump(path("eval.json"), artifacts.eval);

    nlohmann::json manifest;
    manifest["artifacts"] = {"quality_before.json", "quality_after.json", "anomalies.json",
                             "changes.jsonl",       "corrected.csv",      "eval.json"};
    manifest["config"] = cfg.to_json();
    dump(path("manifest.json"), manifest);

    // wall-clock timings live apart so every other artifact is reproducible
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& t : artifacts.timings)
        timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    dump(path("timings.json"), timings);
}

}  // namespace dq::pipeline
