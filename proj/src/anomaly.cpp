#include "dq/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "dq/error.hpp"

namespace dq::anomaly {

namespace {


// Top-k selection with ties included; empty mask when k == 0.
std::vector<uint8_t> flag_top_scores(const std::vector<double>& scores, std::size_t k) {
    std::vector<uint8_t> flags(scores.size(), 0);
    if (k == 0 || scores.empty()) return flags;
    k = std::min(k, scores.size());
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     sorted.end(), std::greater<double>());
    double threshold = sorted[k - 1];
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= threshold) flags[i] = 1;
    return flags;
}

std::size_t requested_count(const DetectConfig& cfg, Dimension dim, std::size_t population) {
    std::string key = to_string(dim);
    auto count_it = cfg.expected_counts.find(key);
    if (count_it != cfg.expected_counts.end()) return std::min(count_it->second, population);
    auto rate_it = cfg.contamination.find(key);
    double rate = rate_it != cfg.contamination.end() ? rate_it->second : 0.0;
    if (rate <= 0.0) return 0;
    return static_cast<std::size_t>(
        std::min<double>(static_cast<double>(population), std::llround(rate * static_cast<double>(population))));
}

}  // namespace

nlohmann::json DetectConfig::to_json() const {
    nlohmann::json j;
    j["contamination"] = contamination;
    j["expected_counts"] = expected_counts;
    j["forest"] = {{"n_trees", forest.n_trees},
                   {"sample_size", forest.sample_size},
                   {"extension_level", forest.extension_level},
                   {"seed", forest.seed}};
    j["metric_weights"] = metric_weights;
    j["literal_eq2"] = literal_eq2;
    j["binary_bypass"] = binary_bypass;
    j["multivariate_accuracy"] = multivariate_accuracy;
    j["er"] = er.to_json();
    j["run_er"] = run_er;
    return j;
}

DetectConfig DetectConfig::from_json(const nlohmann::json& j) {
    DetectConfig c;
    if (j.contains("contamination"))
        c.contamination = j["contamination"].get<std::map<std::string, double>>();
    if (j.contains("expected_counts"))
        c.expected_counts = j["expected_counts"].get<std::map<std::string, std::size_t>>();
    if (j.contains("forest")) {
        const auto& f = j["forest"];
        if (f.contains("n_trees")) c.forest.n_trees = f["n_trees"].get<int>();
        if (f.contains("sample_size")) c.forest.sample_size = f["sample_size"].get<int>();
        if (f.contains("extension_level"))
            c.forest.extension_level = f["extension_level"].get<int>();
        if (f.contains("seed")) c.forest.seed = f["seed"].get<uint64_t>();
    }
    if (j.contains("metric_weights"))
        c.metric_weights = j["metric_weights"].get<std::map<std::string, double>>();
    if (j.contains("literal_eq2")) c.literal_eq2 = j["literal_eq2"].get<bool>();
    if (j.contains("binary_bypass")) c.binary_bypass = j["binary_bypass"].get<bool>();
    if (j.contains("multivariate_accuracy"))
        c.multivariate_accuracy = j["multivariate_accuracy"].get<bool>();
    if (j.contains("er")) c.er = er::ErConfig::from_json(j["er"]);
    if (j.contains("run_er")) c.run_er = j["run_er"].get<bool>();
    return c;
}

nlohmann::json AnomalyReport::to_json() const {
    nlohmann::json j;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json rj;
        rj["row"] = r.row;
        rj["col"] = r.column;
        rj["dimension"] = to_string(r.dimension);
        rj["score"] = r.score;
        if (r.row_b >= 0) rj["row_b"] = r.row_b;
        recs.push_back(rj);
    }
    j["records"] = recs;
    j["metric_scores"] = metric_scores;
    j["global_score"] = global_score;
    nlohmann::json p = params;
    p["weights"] = weights;
    p["snapshot_id"] = snapshot_id;
    nlohmann::json cl = nlohmann::json::array();
    for (const auto& c : clusters) cl.push_back(c);
    p["clusters"] = cl;
    j["params"] = p;
    return j;
}

AnomalyReport AnomalyReport::from_json(const nlohmann::json& j) {
    AnomalyReport r;
    for (const auto& rj : j.at("records")) {
        AnomalyRecord rec;
        rec.row = rj.at("row").get<uint32_t>();
        rec.column = rj.at("col").get<std::string>();
        auto dim = dimension_from_name(rj.at("dimension").get<std::string>());
        if (!dim) fail(ErrorCode::BadConfig, "unknown dimension in anomaly report");
        rec.dimension = *dim;
        rec.score = rj.at("score").get<double>();
        if (rj.contains("row_b")) rec.row_b = rj["row_b"].get<int32_t>();
        r.records.push_back(std::move(rec));
    }
    r.metric_scores = j.at("metric_scores").get<std::map<std::string, double>>();
    r.global_score = j.at("global_score").get<double>();
    if (j.contains("params")) {
        r.params = j["params"];
        if (r.params.contains("weights"))
            r.weights = r.params["weights"].get<std::map<std::string, double>>();
        if (r.params.contains("snapshot_id"))
            r.snapshot_id = r.params["snapshot_id"].get<std::string>();
        if (r.params.contains("clusters"))
            for (const auto& c : r.params["clusters"])
                r.clusters.push_back(c.get<er::DuplicateCluster>());
    }
    return r;
}

DatasetPattern pattern_completeness(const Table& t) {
    DatasetPattern p;
    p.dimension = Dimension::Completeness;
    p.binary = true;
    p.dims = 1;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            p.matrix.push_back(t.at(r, c).missing() ? 1.0 : 0.0);
            p.locators.push_back({static_cast<uint32_t>(r), 0, static_cast<int32_t>(c), false});
        }
    }
    return p;
}

DatasetPattern pattern_conformity(const Table& t) {
    DatasetPattern p;
    p.dimension = Dimension::Conformity;
    p.binary = true;
    p.dims = 3;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            ValueKind k = t.kind_at(r, c);
            if (k == ValueKind::Missing) continue;
            p.matrix.push_back(k == ValueKind::Numeric ? 1.0 : 0.0);
            p.matrix.push_back(k == ValueKind::String ? 1.0 : 0.0);
            p.matrix.push_back(k == ValueKind::Date ? 1.0 : 0.0);
            p.locators.push_back({static_cast<uint32_t>(r), 0, static_cast<int32_t>(c), false});
        }
    }
    return p;
}

DatasetPattern pattern_readability(const Table& t, const Lexicon& lexicon) {
    if (lexicon.empty()) fail(ErrorCode::EmptyLexicon, "readability pattern needs a lexicon");
    DatasetPattern p;
    p.dimension = Dimension::Readability;
    p.binary = true;
    p.dims = 1;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            const Cell& cell = t.at(r, c);
            if (cell.tag != Cell::Tag::Text) continue;
            p.matrix.push_back(lexicon.readable(cell.text) ? 0.0 : 1.0);
            p.locators.push_back({static_cast<uint32_t>(r), 0, static_cast<int32_t>(c), false});
        }
    }
    return p;
}

std::vector<DatasetPattern> pattern_accuracy(const Table& t,
                                             const std::vector<timeparse::Format>& lenient_formats,
                                             std::vector<std::string>* skipped) {
    std::vector<DatasetPattern> out;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        const Column& col = t.column(c);
        if (col.declared_kind == DeclaredKind::String) continue;  // categorical/text excluded

        std::vector<double> values;
        std::vector<uint32_t> rows;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            const Cell& cell = col.cells[r];
            if (col.declared_kind == DeclaredKind::Numeric) {
                if (cell.tag == Cell::Tag::Number) {
                    values.push_back(cell.num);
                    rows.push_back(static_cast<uint32_t>(r));
                }
            } else {  // Date column; wrong-format date text still carries a time value
                if (cell.tag == Cell::Tag::Timestamp) {
                    values.push_back(static_cast<double>(cell.ts) / 86400.0);
                    rows.push_back(static_cast<uint32_t>(r));
                } else if (cell.tag == Cell::Tag::Text) {
                    if (auto ts = timeparse::parse(cell.text, lenient_formats)) {
                        values.push_back(static_cast<double>(*ts) / 86400.0);
                        rows.push_back(static_cast<uint32_t>(r));
                    }
                }
            }
        }
        if (values.size() < 2) {
            if (skipped && !values.empty()) skipped->push_back(col.name);
            continue;
        }
        double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());
        if (var <= 0.0) {
            if (skipped) skipped->push_back(col.name);
            continue;
        }
        double sd = std::sqrt(var);

        DatasetPattern p;
        p.dimension = Dimension::Accuracy;
        p.binary = false;
        p.dims = 1;
        p.column_name = col.name;
        for (std::size_t i = 0; i < values.size(); ++i) {
            p.matrix.push_back((values[i] - mean) / sd);
            p.locators.push_back({rows[i], 0, static_cast<int32_t>(c), false});
        }
        out.push_back(std::move(p));
    }
    return out;
}

DatasetPattern pattern_uniqueness(const Table& t,
                                  const std::vector<er::CandidatePair>& candidates) {
    (void)t;
    DatasetPattern p;
    p.dimension = Dimension::Uniqueness;
    p.binary = false;
    p.dims = 1;
    for (const auto& pair : candidates) {
        p.matrix.push_back(pair.weighted_sim);
        p.locators.push_back({pair.row_a, pair.row_b, -1, true});
    }
    return p;
}

DatasetPattern pattern_consistency(const Table& t, const er::FeatureExtractor& fx,
                                   const std::vector<er::CandidatePair>& flagged_pairs) {
    DatasetPattern p;
    p.dimension = Dimension::Consistency;
    p.binary = false;
    p.dims = 1;
    for (const auto& pair : flagged_pairs) {
        for (std::size_t f = 0; f < fx.fields().size(); ++f) {
            auto col = t.column_index(fx.fields()[f]);
            if (!col) continue;
            p.matrix.push_back(pair.features[f]);
            p.locators.push_back(
                {pair.row_a, pair.row_b, static_cast<int32_t>(*col), true});
        }
    }
    return p;
}

double metric_anomaly_score(const std::vector<AnomalyRecord>& records) {
    if (records.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : records) sum += r.score;
    return sum / static_cast<double>(records.size());
}

double global_anomaly_score(const std::map<std::string, double>& metric_scores,
                            const std::map<std::string, double>& weights, bool literal_eq2) {
    if (metric_scores.empty()) return 0.0;
    double num = 0.0, weight_sum = 0.0, score_sum = 0.0;
    for (const auto& [name, score] : metric_scores) {
        double w = weights.empty() ? 1.0 : (weights.count(name) ? weights.at(name) : 0.0);
        if (w < 0.0) fail(ErrorCode::BadConfig, "negative metric weight for " + name);
        num += w * score;
        weight_sum += w;
        score_sum += score;
    }
    if (weight_sum <= 0.0) fail(ErrorCode::AllZeroWeights, "anomaly metric weights all zero");
    if (literal_eq2) return score_sum > 0.0 ? num / score_sum : 0.0;
    return num / weight_sum;
}

namespace {

// Forest run over a pattern: scores, top-k selection, optional orientation
// filter (+1 keeps values above the pattern mean, -1 below).
struct ForestOutcome {
    std::vector<uint8_t> flagged;
    std::vector<double> scores;
};

ForestOutcome run_forest(const DatasetPattern& p, const DetectConfig& cfg, uint64_t seed_offset,
                         std::size_t k, int orientation) {
    ForestOutcome out;
    out.flagged.assign(p.rows(), 0);
    if (p.rows() < 2 || k == 0) return out;
    eif::Params params = cfg.forest;
    params.seed += seed_offset;
    auto forest = eif::IsolationForest::train(p.matrix, p.rows(), p.dims, params);
    out.scores = forest.score_all(p.matrix, p.rows());
    out.flagged = flag_top_scores(out.scores, k);
    if (orientation != 0 && p.dims == 1) {
        // Reference is the unflagged (normal) population; a flagged point is
        // kept only when its value sits on the anomalous side of it.
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            if (out.flagged[i]) continue;
            sum += p.matrix[i];
            ++count;
        }
        if (count > 0) {
            double reference = sum / static_cast<double>(count);
            for (std::size_t i = 0; i < p.rows(); ++i) {
                if (!out.flagged[i]) continue;
                bool keep =
                    orientation > 0 ? p.matrix[i] > reference : p.matrix[i] < reference;
                if (!keep) out.flagged[i] = 0;
            }
        }
    }
    return out;
}

struct UnionFindLocal {
    std::vector<std::size_t> parent;
    explicit UnionFindLocal(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

AnomalyReport detect(const Table& t, const DetectConfig& cfg, const Lexicon* lexicon) {
    AnomalyReport report;
    report.snapshot_id = t.snapshot_id();
    std::map<std::string, std::vector<AnomalyRecord>> by_dim;
    std::set<std::string> evaluated;

    auto col_name = [&t](int32_t c) { return t.column(static_cast<std::size_t>(c)).name; };

    // Binary dimensions: exact selection (score fixed at 100). The forest
    // path stays available behind binary_bypass=false for fidelity runs.
    auto emit_binary = [&](const DatasetPattern& p, Dimension dim, auto is_anomalous) {
        evaluated.insert(to_string(dim));
        auto& records = by_dim[to_string(dim)];
        if (cfg.binary_bypass) {
            for (std::size_t i = 0; i < p.rows(); ++i) {
                if (!is_anomalous(i)) continue;
                records.push_back({p.locators[i].row_a, -1, col_name(p.locators[i].column), dim,
                                   100.0});
            }
        } else {
            std::size_t anomalous = 0;
            for (std::size_t i = 0; i < p.rows(); ++i)
                if (is_anomalous(i)) ++anomalous;
            auto outcome = run_forest(p, cfg, static_cast<uint64_t>(dim) * 1000, anomalous, 0);
            for (std::size_t i = 0; i < p.rows(); ++i) {
                if (!outcome.flagged[i]) continue;
                records.push_back({p.locators[i].row_a, -1, col_name(p.locators[i].column), dim,
                                   100.0});
            }
        }
    };

    {
        DatasetPattern p = pattern_completeness(t);
        emit_binary(p, Dimension::Completeness, [&](std::size_t i) { return p.matrix[i] > 0.5; });
    }
    {
        DatasetPattern p = pattern_conformity(t);
        emit_binary(p, Dimension::Conformity, [&](std::size_t i) {
            const auto& loc = p.locators[i];
            DeclaredKind declared = t.column(static_cast<std::size_t>(loc.column)).declared_kind;
            double is_num = p.matrix[i * 3], is_str = p.matrix[i * 3 + 1],
                   is_date = p.matrix[i * 3 + 2];
            switch (declared) {
                case DeclaredKind::Numeric: return is_num < 0.5;
                case DeclaredKind::String: return is_str < 0.5;
                case DeclaredKind::Date: return is_date < 0.5;
            }
            return false;
        });
    }
    if (lexicon && !lexicon->empty()) {
        DatasetPattern p = pattern_readability(t, *lexicon);
        emit_binary(p, Dimension::Readability, [&](std::size_t i) { return p.matrix[i] > 0.5; });
    }

    // Accuracy: one univariate forest per numeric/date column by default.
    {
        evaluated.insert(to_string(Dimension::Accuracy));
        std::vector<std::string> skipped;
        auto patterns = pattern_accuracy(t, cfg.lenient_date_formats, &skipped);
        if (cfg.multivariate_accuracy && !patterns.empty()) {
            // joint pattern over rows present in every per-column pattern
            std::map<uint32_t, std::vector<double>> row_values;
            for (const auto& p : patterns)
                for (std::size_t i = 0; i < p.rows(); ++i)
                    row_values[p.locators[i].row_a].push_back(p.matrix[i]);
            DatasetPattern joint;
            joint.dimension = Dimension::Accuracy;
            joint.dims = patterns.size();
            for (const auto& [row, vals] : row_values) {
                if (vals.size() != patterns.size()) continue;
                joint.matrix.insert(joint.matrix.end(), vals.begin(), vals.end());
                joint.locators.push_back({row, 0, -1, false});
            }
            std::size_t k = requested_count(cfg, Dimension::Accuracy, joint.rows());
            auto outcome = run_forest(joint, cfg, 7000, k, 0);
            for (std::size_t i = 0; i < joint.rows(); ++i) {
                if (!outcome.flagged[i]) continue;
                by_dim[to_string(Dimension::Accuracy)].push_back(
                    {joint.locators[i].row_a, -1, "", Dimension::Accuracy,
                     outcome.scores[i] * 100.0});
            }
        } else {
            for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
                const auto& p = patterns[pi];
                std::size_t k = requested_count(cfg, Dimension::Accuracy, p.rows());
                auto outcome = run_forest(p, cfg, 100 + pi, k, 0);
                for (std::size_t i = 0; i < p.rows(); ++i) {
                    if (!outcome.flagged[i]) continue;
                    by_dim[to_string(Dimension::Accuracy)].push_back(
                        {p.locators[i].row_a, -1, p.column_name, Dimension::Accuracy,
                         outcome.scores[i] * 100.0});
                }
            }
        }
        report.params["accuracy_columns_skipped"] = skipped;
    }

    // Uniqueness and consistency need candidate pairs from entity resolution.
    if (cfg.run_er && t.row_count() >= 2 &&
        static_cast<std::size_t>(cfg.er.window) <= t.row_count()) {
        evaluated.insert(to_string(Dimension::Uniqueness));
        evaluated.insert(to_string(Dimension::Consistency));
        std::vector<er::CandidatePair> flagged_pairs;
        try {
            er::MatchModel model = er::fit(t, cfg.er);
            auto detail = er::resolve_detail(t, model, cfg.er);
            er::FeatureExtractor fx(t, cfg.er);

            DatasetPattern uniq = pattern_uniqueness(t, detail.candidates);
            std::size_t k = requested_count(cfg, Dimension::Uniqueness, uniq.rows());
            auto outcome = run_forest(uniq, cfg, 9000, k, +1);  // high similarity flagged
            UnionFindLocal uf(t.row_count());
            for (std::size_t i = 0; i < uniq.rows(); ++i) {
                if (!outcome.flagged[i]) continue;
                const auto& pair = detail.candidates[i];
                flagged_pairs.push_back(pair);
                uf.unite(pair.row_a, pair.row_b);
                by_dim[to_string(Dimension::Uniqueness)].push_back(
                    {pair.row_b, static_cast<int32_t>(pair.row_a), "", Dimension::Uniqueness,
                     outcome.scores[i] * 100.0});
            }
            std::map<std::size_t, er::DuplicateCluster> groups;
            for (const auto& pair : flagged_pairs) groups[uf.find(pair.row_a)];
            for (std::size_t r = 0; r < t.row_count(); ++r) {
                auto it = groups.find(uf.find(r));
                if (it != groups.end()) it->second.push_back(r);
            }
            for (auto& [root, members] : groups)
                if (members.size() >= 2) report.clusters.push_back(std::move(members));
            std::sort(report.clusters.begin(), report.clusters.end());

            DatasetPattern cons = pattern_consistency(t, fx, flagged_pairs);
            std::size_t kc = requested_count(cfg, Dimension::Consistency, cons.rows());
            auto cons_outcome = run_forest(cons, cfg, 11000, kc, -1);  // low similarity flagged
            for (std::size_t i = 0; i < cons.rows(); ++i) {
                if (!cons_outcome.flagged[i]) continue;
                const auto& loc = cons.locators[i];
                by_dim[to_string(Dimension::Consistency)].push_back(
                    {std::max(loc.row_a, loc.row_b),
                     static_cast<int32_t>(std::min(loc.row_a, loc.row_b)),
                     col_name(loc.column), Dimension::Consistency,
                     cons_outcome.scores[i] * 100.0});
            }
        } catch (const DqError& e) {
            // no trainable duplicate signal in this table; dimensions stay at zero
            report.params["er_note"] = e.what();
        }
    }

    for (const auto& dim_name : evaluated) {
        auto it = by_dim.find(dim_name);
        report.metric_scores[dim_name] =
            it == by_dim.end() ? 0.0 : metric_anomaly_score(it->second);
        if (it != by_dim.end())
            report.records.insert(report.records.end(), it->second.begin(), it->second.end());
    }
    report.weights = cfg.metric_weights;
    report.global_score = global_anomaly_score(report.metric_scores, report.weights,
                                               cfg.literal_eq2);
    report.params["contamination"] = cfg.contamination;
    report.params["expected_counts"] = cfg.expected_counts;
    report.params["forest"] = {{"n_trees", cfg.forest.n_trees},
                               {"sample_size", cfg.forest.sample_size},
                               {"extension_level", cfg.forest.extension_level},
                               {"seed", cfg.forest.seed}};
    report.params["literal_eq2"] = cfg.literal_eq2;
    report.params["binary_bypass"] = cfg.binary_bypass;
    {
        std::vector<std::string> names;
        for (const auto& col : t.columns()) names.push_back(col.name);
        report.params["table"] = {{"rows", t.row_count()}, {"columns", names}};
    }
    return report;
}

Confusion make_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    Confusion c;
    c.tp = tp;
    c.fp = fp;
    c.tn = tn;
    c.fn = fn;
    if (tp + fp > 0) {
        c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
        c.precision = 0.0;
        c.precision_defined = false;
    }
    c.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                         : (tp + fp ? 0.0 : 1.0);
    c.f_score = (c.precision + c.recall) > 0.0
                    ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                    : 0.0;
    std::size_t pop = c.population();
    c.accuracy = pop ? static_cast<double>(tp + tn) / static_cast<double>(pop) : 1.0;
    return c;
}

nlohmann::json DetectionEval::to_json() const {
    nlohmann::json j;
    auto conf_json = [](const Confusion& c) {
        nlohmann::json cj;
        cj["tp"] = c.tp;
        cj["fp"] = c.fp;
        cj["tn"] = c.tn;
        cj["fn"] = c.fn;
        cj["precision"] = c.precision;
        cj["precision_defined"] = c.precision_defined;
        cj["recall"] = c.recall;
        cj["f_score"] = c.f_score;
        cj["accuracy"] = c.accuracy;
        return cj;
    };
    nlohmann::json dims;
    for (const auto& [name, c] : per_dimension) dims[name] = conf_json(c);
    j["per_dimension"] = dims;
    j["overall"] = conf_json(overall);
    return j;
}

DetectionEval evaluate_detection(const AnomalyReport& report, const GroundTruth& truth,
                                 const Table& t) {
    std::vector<std::string> columns;
    for (const auto& col : t.columns()) columns.push_back(col.name);
    return evaluate_detection(report, truth, t.row_count(), columns);
}

DetectionEval evaluate_detection(const AnomalyReport& report, const GroundTruth& truth,
                                 std::size_t row_count, const std::vector<std::string>& columns) {
    std::map<std::string, std::size_t> col_index;
    for (std::size_t c = 0; c < columns.size(); ++c) col_index[columns[c]] = c;
    auto column_of = [&col_index](const std::string& name) -> std::optional<std::size_t> {
        auto it = col_index.find(name);
        if (it == col_index.end()) return std::nullopt;
        return it->second;
    };

    using CellKey = uint64_t;
    auto cell_key = [](std::size_t row, std::size_t col) {
        return (static_cast<uint64_t>(row) << 32) | static_cast<uint64_t>(col);
    };
    std::map<std::string, std::set<CellKey>> truth_cells;
    for (const auto& e : truth.entries) {
        auto col = column_of(e.col);
        if (!col || e.row >= row_count)
            fail(ErrorCode::TruthMismatch, "truth entry outside table: " + e.col);
        truth_cells[to_string(e.dimension)].insert(cell_key(e.row, *col));
    }
    // duplicate pairs, closed transitively over shared sources
    std::set<std::pair<std::size_t, std::size_t>> truth_pairs;
    std::map<std::size_t, std::vector<std::size_t>> by_source;
    for (const auto& [dup, src] : truth.duplicate_map) {
        if (dup >= row_count || src >= row_count)
            fail(ErrorCode::TruthMismatch, "duplicate_map row outside table");
        by_source[src].push_back(dup);
    }
    for (const auto& [src, dups] : by_source) {
        std::vector<std::size_t> group = dups;
        group.push_back(src);
        std::sort(group.begin(), group.end());
        for (std::size_t i = 0; i < group.size(); ++i)
            for (std::size_t j = i + 1; j < group.size(); ++j)
                truth_pairs.insert({group[i], group[j]});
    }

    std::map<std::string, std::set<CellKey>> pred_cells;
    std::set<std::pair<std::size_t, std::size_t>> pred_pairs;
    for (const auto& r : report.records) {
        if (r.dimension == Dimension::Uniqueness) {
            std::size_t a = r.row, b = static_cast<std::size_t>(std::max(r.row_b, 0));
            if (a > b) std::swap(a, b);
            pred_pairs.insert({a, b});
        } else {
            auto col = column_of(r.column);
            if (!col) continue;
            pred_cells[to_string(r.dimension)].insert(cell_key(r.row, *col));
        }
    }

    DetectionEval eval;
    std::size_t cell_population = row_count * columns.size();
    const char* cell_dims[] = {"completeness", "conformity", "readability", "accuracy",
                               "consistency"};
    std::size_t sum_tp = 0, sum_fp = 0, sum_tn = 0, sum_fn = 0;
    for (const char* dim : cell_dims) {
        const auto& truth_set = truth_cells[dim];
        const auto& pred_set = pred_cells[dim];
        std::size_t tp = 0;
        for (const auto& k : pred_set)
            if (truth_set.count(k)) ++tp;
        std::size_t fp = pred_set.size() - tp;
        std::size_t fn = truth_set.size() - tp;
        std::size_t tn = cell_population - tp - fp - fn;
        eval.per_dimension[dim] = make_confusion(tp, fp, tn, fn);
        sum_tp += tp;
        sum_fp += fp;
        sum_tn += tn;
        sum_fn += fn;
    }
    {
        std::size_t n = row_count;
        std::size_t pair_population = n * (n - 1) / 2;
        std::size_t tp = 0;
        for (const auto& pr : pred_pairs)
            if (truth_pairs.count(pr)) ++tp;
        std::size_t fp = pred_pairs.size() - tp;
        std::size_t fn = truth_pairs.size() - tp;
        std::size_t tn = pair_population - tp - fp - fn;
        eval.per_dimension["uniqueness"] = make_confusion(tp, fp, tn, fn);
        sum_tp += tp;
        sum_fp += fp;
        sum_tn += tn;
        sum_fn += fn;
    }
    eval.overall = make_confusion(sum_tp, sum_fp, sum_tn, sum_fn);
    return eval;
}

}  // namespace dq::anomaly
