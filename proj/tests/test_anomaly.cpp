#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dq/anomaly.hpp"
#include "dq/eif.hpp"
#include "dq/error.hpp"
#include "dq/rng.hpp"
#include "dq/table.hpp"

using namespace dq;
using namespace dq::anomaly;

namespace {

Table make_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, LoadOptions opts = {}) {
    return table_from_csv_doc(header, rows, opts);
}

}  // namespace

TEST_CASE("c_factor endpoints") {
    CHECK(eif::c_factor(1) == doctest::Approx(0.0));
    CHECK(eif::c_factor(2) == doctest::Approx(1.0));
    CHECK(eif::c_factor(100) > eif::c_factor(50));
}

TEST_CASE("eif determinism and clamping") {
    std::vector<std::vector<double>> rows;
    Rng rng(3);
    for (int i = 0; i < 100; ++i) rows.push_back({rng.normal(), rng.normal()});
    eif::Params p;
    p.n_trees = 25;
    p.sample_size = 265;
    p.seed = 11;
    auto f1 = eif::IsolationForest::train(rows, p);
    auto f2 = eif::IsolationForest::train(rows, p);
    CHECK(f1.effective_sample_size() == 100);  // n < sample size: all points used
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x = {rng.normal(), rng.normal()};
        CHECK(f1.score(x) == f2.score(x));
    }
}

TEST_CASE("eif score bounds and formula identity") {
    std::vector<std::vector<double>> rows;
    Rng rng(5);
    for (int i = 0; i < 400; ++i) rows.push_back({rng.normal()});
    eif::Params p;
    p.n_trees = 50;
    p.seed = 2;
    auto f = eif::IsolationForest::train(rows, p);
    double c = eif::c_factor(static_cast<std::size_t>(f.effective_sample_size()));
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x = {rng.normal() * 3.0};
        double s = f.score(x);
        CHECK(s > 0.0);
        CHECK(s <= 1.0);
        CHECK(s == doctest::Approx(std::pow(2.0, -f.avg_path_length(x) / c)));
    }
    CHECK_THROWS_AS(f.score(std::vector<double>{1.0, 2.0}), DqError);
}

TEST_CASE("eif isolates a far outlier in a 2-D cloud") {
    std::vector<std::vector<double>> rows;
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) rows.push_back({rng.normal(), rng.normal()});
    rows.push_back({12.0, -11.0});  // planted far outlier
    eif::Params p;
    p.seed = 13;
    auto f = eif::IsolationForest::train(rows, p);
    std::vector<double> scores;
    for (const auto& r : rows) scores.push_back(f.score(r));
    double outlier_score = scores.back();
    std::size_t above = 0;
    for (double s : scores)
        if (s > outlier_score) ++above;
    // outlier ranks above the 99th percentile of all scores
    CHECK(above < scores.size() / 100);
}

TEST_CASE("planted 6-sigma outliers recovered at 1% contamination (small scale)") {
    Rng rng(17);
    std::size_t n = 2000;
    std::vector<std::vector<std::string>> rows;
    std::set<std::size_t> planted;
    while (planted.size() < 20) planted.insert(rng.below(n));
    for (std::size_t i = 0; i < n; ++i) {
        double v = planted.count(i) ? 40.0 + (rng.uniform() < 0.5 ? -1 : 1) * (6.0 + 4.0 * rng.uniform()) * 12.0
                                    : rng.normal(40.0, 12.0);
        rows.push_back({std::to_string(v)});
    }
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    Table t = make_table({"age"}, rows, lo);
    DetectConfig cfg;
    cfg.run_er = false;
    cfg.contamination = {{"accuracy", 0.01}};
    cfg.forest.seed = 99;
    AnomalyReport report = detect(t, cfg, nullptr);
    std::size_t tp = 0, fp = 0;
    for (const auto& r : report.records) {
        if (r.dimension != Dimension::Accuracy) continue;
        if (planted.count(r.row)) ++tp;
        else ++fp;
    }
    double recall = static_cast<double>(tp) / 20.0;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    CHECK(recall >= 0.95);
    CHECK(precision >= 0.80);
}

TEST_CASE("pattern_completeness") {
    Table full = make_table({"a", "b"}, {{"1", "2"}, {"3", "4"}});
    auto p = pattern_completeness(full);
    CHECK(p.rows() == 4);
    CHECK(std::accumulate(p.matrix.begin(), p.matrix.end(), 0.0) == doctest::Approx(0.0));

    std::vector<std::vector<std::string>> rows(20, std::vector<std::string>(5, "v"));
    rows[1][2] = "";
    rows[7][0] = "";
    rows[19][4] = "";
    auto p2 = pattern_completeness(make_table({"a", "b", "c", "d", "e"}, rows));
    CHECK(p2.rows() == 100);
    CHECK(std::accumulate(p2.matrix.begin(), p2.matrix.end(), 0.0) == doctest::Approx(3.0));
    CHECK(p2.binary);
}

TEST_CASE("pattern_conformity three-bit codes") {
    LoadOptions lo;
    lo.schema = {{"v", DeclaredKind::Numeric}};
    Table t = make_table({"v"}, {{"12345"}, {"hello"}, {"AB12"}, {"2020-03-27"}}, lo);
    auto p = pattern_conformity(t);
    REQUIRE(p.rows() == 4);
    REQUIRE(p.dims == 3);
    auto code = [&p](std::size_t i) {
        return std::vector<double>{p.matrix[i * 3], p.matrix[i * 3 + 1], p.matrix[i * 3 + 2]};
    };
    CHECK(code(0) == std::vector<double>{1, 0, 0});  // numeric
    CHECK(code(1) == std::vector<double>{0, 1, 0});  // string
    CHECK(code(2) == std::vector<double>{0, 0, 0});  // alphanumeric
    CHECK(code(3) == std::vector<double>{0, 0, 1});  // date content in numeric column
}

TEST_CASE("pattern_readability bits, text cells only") {
    LoadOptions lo;
    lo.schema = {{"n", DeclaredKind::Numeric}};
    Table t = make_table({"city", "n"}, {{"montreal", "1"}, {"Moreal", "2"}}, lo);
    Lexicon lex;
    lex.add_word("montreal");
    auto p = pattern_readability(t, lex);
    REQUIRE(p.rows() == 2);  // numeric cells excluded
    CHECK(p.matrix[0] == doctest::Approx(0.0));
    CHECK(p.matrix[1] == doctest::Approx(1.0));
}

TEST_CASE("pattern_accuracy z-scores and skips") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}, {"k", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({std::to_string(30 + i), "5", "x"});
    Table t = make_table({"age", "k", "name"}, rows, lo);
    std::vector<std::string> skipped;
    auto patterns = pattern_accuracy(t, timeparse::default_formats(), &skipped);
    REQUIRE(patterns.size() == 1);  // constant column skipped, string excluded
    CHECK(skipped == std::vector<std::string>{"k"});
    CHECK(patterns[0].column_name == "age");
    // value equal to the mean maps to 0
    double mean_z = patterns[0].matrix[4];  // ages 30..39, mean 34.5; value 34 ~ -0.17sd
    CHECK(std::abs(mean_z) < 0.2);

    // the published-style z computation: (300 - 40) / 12 = 21.7
    double z = (300.0 - 40.0) / 12.0;
    CHECK(z == doctest::Approx(21.6667).epsilon(1e-3));
}

TEST_CASE("pattern_accuracy affine invariance") {
    LoadOptions lo;
    lo.schema = {{"x", DeclaredKind::Numeric}};
    Rng rng(23);
    std::vector<std::vector<std::string>> rows, scaled_rows;
    for (int i = 0; i < 200; ++i) {
        double v = rng.normal(10.0, 2.0);
        rows.push_back({std::to_string(v)});
        scaled_rows.push_back({std::to_string(3.5 * v + 11.0)});
    }
    auto p1 = pattern_accuracy(make_table({"x"}, rows, lo), timeparse::default_formats());
    auto p2 = pattern_accuracy(make_table({"x"}, scaled_rows, lo), timeparse::default_formats());
    REQUIRE(p1.size() == 1);
    REQUIRE(p2.size() == 1);
    for (std::size_t i = 0; i < p1[0].matrix.size(); ++i)
        CHECK(p1[0].matrix[i] == doctest::Approx(p2[0].matrix[i]).epsilon(1e-6));
}

TEST_CASE("metric and global anomaly scores") {
    auto rec = [](double score) { return AnomalyRecord{0, -1, "c", Dimension::Accuracy, score}; };
    CHECK(metric_anomaly_score({rec(80), rec(60)}) == doctest::Approx(70.0));
    CHECK(metric_anomaly_score({}) == doctest::Approx(0.0));
    CHECK(metric_anomaly_score({rec(100), rec(100), rec(100)}) == doctest::Approx(100.0));

    // permutation invariance
    CHECK(metric_anomaly_score({rec(10), rec(90), rec(50)}) ==
          doctest::Approx(metric_anomaly_score({rec(50), rec(10), rec(90)})));

    std::map<std::string, double> sm = {{"accuracy", 40.0}, {"completeness", 60.0}};
    CHECK(global_anomaly_score(sm, {}) == doctest::Approx(50.0));
    CHECK(global_anomaly_score(sm, {{"accuracy", 1.0}, {"completeness", 0.0}}) ==
          doctest::Approx(40.0));
    std::map<std::string, double> sm2 = {{"accuracy", 90.0}, {"completeness", 30.0}};
    CHECK(global_anomaly_score(sm2, {{"accuracy", 2.0}, {"completeness", 1.0}}) ==
          doctest::Approx(70.0));
    // literal Eq. (2): sum(w*S)/sum(S) = (2*90 + 1*30)/120
    CHECK(global_anomaly_score(sm2, {{"accuracy", 2.0}, {"completeness", 1.0}}, true) ==
          doctest::Approx(210.0 / 120.0));
    CHECK_THROWS_AS(global_anomaly_score(sm, {{"accuracy", 0.0}, {"completeness", 0.0}}), DqError);

    // normalized bounds: min <= S_A <= max
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::string, double> scores, weights;
        double lo = 1e9, hi = -1e9;
        for (int m = 0; m < 4; ++m) {
            double s = 100.0 * rng.uniform();
            scores["m" + std::to_string(m)] = s;
            weights["m" + std::to_string(m)] = 0.1 + rng.uniform();
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        double sa = global_anomaly_score(scores, weights);
        CHECK(sa >= lo - 1e-9);
        CHECK(sa <= hi + 1e-9);
    }
}

TEST_CASE("detect: clean table yields zero records") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows;
    const char* syllables[] = {"ba", "ce", "di", "fo", "gu", "ha", "ki", "lo"};
    for (int i = 0; i < 40; ++i) {
        std::string name = std::string(syllables[i % 8]) + syllables[(i / 8) % 8] + "ra";
        rows.push_back({name, std::to_string(30 + i % 7)});
    }
    Table t = make_table({"name", "age"}, rows, lo);
    DetectConfig cfg;
    // labeled-subsample estimation of a clean table: zero expected anomalies
    cfg.expected_counts = {{"accuracy", 0}, {"uniqueness", 0}, {"consistency", 0}};
    cfg.er.key_fields = {"name"};
    Lexicon lex = Lexicon::bundled();
    for (const auto& row : rows) lex.add_word(row[0]);
    AnomalyReport report = detect(t, cfg, &lex);
    CHECK(report.records.empty());
    CHECK(report.global_score == doctest::Approx(0.0));
}

TEST_CASE("detect: three missing cells produce exactly three completeness records") {
    std::vector<std::vector<std::string>> rows(10, std::vector<std::string>(3, "v"));
    rows[2][1] = "";
    rows[5][0] = "N/A";
    rows[9][2] = "null";
    Table t = make_table({"a", "b", "c"}, rows);
    DetectConfig cfg;
    cfg.run_er = false;
    cfg.contamination.clear();
    AnomalyReport report = detect(t, cfg, nullptr);
    std::size_t completeness_records = 0;
    for (const auto& r : report.records)
        if (r.dimension == Dimension::Completeness) {
            ++completeness_records;
            CHECK(r.score == doctest::Approx(100.0));
        }
    CHECK(completeness_records == 3);
    CHECK(report.metric_scores.at("completeness") == doctest::Approx(100.0));
}

TEST_CASE("detect: wrong-format future date co-flagged by accuracy and conformity") {
    LoadOptions lo;
    lo.schema = {{"birth", DeclaredKind::Date}};
    lo.date_formats = {timeparse::Format::IsoDate};  // strict column format
    Rng rng(41);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 60; ++i) {
        int year = 1950 + static_cast<int>(rng.below(45));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-06-15", year);
        rows.push_back({buf});
    }
    rows.push_back({"05/2030"});
    Table t = make_table({"birth"}, rows, lo);
    DetectConfig cfg;
    cfg.run_er = false;
    cfg.contamination = {{"accuracy", 0.02}};
    AnomalyReport report = detect(t, cfg, nullptr);
    bool accuracy_flagged = false, conformity_flagged = false;
    for (const auto& r : report.records) {
        if (r.row != 60) continue;
        if (r.dimension == Dimension::Accuracy) accuracy_flagged = true;
        if (r.dimension == Dimension::Conformity) conformity_flagged = true;
    }
    CHECK(accuracy_flagged);
    CHECK(conformity_flagged);
}

TEST_CASE("detect: duplicate pairs flagged under uniqueness, conflicts under consistency") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows;
    const char* names[] = {"liam nor", "emma wood", "noah hart", "mia stone", "evan marsh",
                           "lucy reed", "owen black", "ruby snow", "finn gray", "elsa brook",
                           "carl dune", "june field", "hugo crest", "iris vale", "axel storm",
                           "nora swift", "remy frost", "tara glen", "umar ridge", "vera lake"};
    for (int i = 0; i < 20; ++i)
        rows.push_back({names[i], "city" + std::to_string(i), std::to_string(25 + i)});
    // two near-duplicates: same name/age, conflicting city
    rows.push_back({"liam nor", "othertown", "25"});
    rows.push_back({"emma wood", "city1", "26"});
    Table t = make_table({"name", "city", "age"}, rows, lo);

    DetectConfig cfg;
    cfg.er.key_fields = {"name"};
    cfg.er.window = 6;
    cfg.er.auto_label_lo = 0.35;
    cfg.er.auto_label_hi = 0.95;
    cfg.expected_counts = {{"accuracy", 0}, {"uniqueness", 2}, {"consistency", 1}};
    AnomalyReport report = detect(t, cfg, nullptr);

    std::set<std::size_t> dup_rows;
    bool conflict_on_city = false;
    for (const auto& r : report.records) {
        if (r.dimension == Dimension::Uniqueness) {
            dup_rows.insert(r.row);
            CHECK(r.row_b >= 0);
        }
        if (r.dimension == Dimension::Consistency && r.column == "city") conflict_on_city = true;
    }
    CHECK(dup_rows.count(20));
    CHECK(dup_rows.count(21));
    CHECK(conflict_on_city);
    REQUIRE(!report.clusters.empty());
    // clusters close over flagged pairs
    bool cluster_with_20 = false;
    for (const auto& c : report.clusters) {
        if (std::find(c.begin(), c.end(), 20u) != c.end()) {
            cluster_with_20 = true;
            CHECK(c.size() >= 2);
        }
    }
    CHECK(cluster_with_20);
}

TEST_CASE("detect: locator validity and determinism") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    Rng rng(51);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 50; ++i) {
        std::string v = rng.uniform() < 0.07 ? "" : std::to_string(rng.normal(40, 12));
        rows.push_back({"name" + std::to_string(i), v});
    }
    Table t = make_table({"name", "age"}, rows, lo);
    DetectConfig cfg;
    cfg.run_er = false;
    AnomalyReport r1 = detect(t, cfg, nullptr);
    AnomalyReport r2 = detect(t, cfg, nullptr);
    CHECK(r1.to_json().dump() == r2.to_json().dump());
    for (const auto& rec : r1.records) {
        CHECK(rec.row < t.row_count());
        if (!rec.column.empty()) CHECK(t.column_index(rec.column).has_value());
        CHECK(rec.score > 0.0);
        CHECK(rec.score <= 100.0);
    }
}

TEST_CASE("evaluate_detection confusion math") {
    // perfect prediction
    std::vector<std::vector<std::string>> rows(10, std::vector<std::string>(2, "v"));
    rows[3][0] = "";
    rows[6][1] = "";
    Table t = make_table({"a", "b"}, rows);
    GroundTruth truth;
    truth.entries.push_back({3, "a", Dimension::Completeness, "v"});
    truth.entries.push_back({6, "b", Dimension::Completeness, "v"});

    DetectConfig cfg;
    cfg.run_er = false;
    cfg.contamination.clear();
    AnomalyReport report = detect(t, cfg, nullptr);
    DetectionEval eval = evaluate_detection(report, truth, t);
    CHECK(eval.per_dimension["completeness"].precision == doctest::Approx(1.0));
    CHECK(eval.per_dimension["completeness"].recall == doctest::Approx(1.0));
    CHECK(eval.per_dimension["completeness"].f_score == doctest::Approx(1.0));
    CHECK(eval.per_dimension["completeness"].accuracy == doctest::Approx(1.0));
    CHECK(eval.per_dimension["completeness"].population() == t.cell_count());

    // no predictions but some truth anomalies: recall 0, precision flagged
    AnomalyReport empty_report;
    DetectionEval eval2 = evaluate_detection(empty_report, truth, t);
    CHECK(eval2.per_dimension["completeness"].recall == doctest::Approx(0.0));
    CHECK(eval2.per_dimension["completeness"].precision == doctest::Approx(0.0));
    CHECK(!eval2.per_dimension["completeness"].precision_defined);

    // hand confusion: TP=8 FP=2 FN=2
    Confusion c = make_confusion(8, 2, 100, 2);
    CHECK(c.precision == doctest::Approx(0.8));
    CHECK(c.recall == doctest::Approx(0.8));
    CHECK(c.f_score == doctest::Approx(0.8));

    GroundTruth bad;
    bad.entries.push_back({99, "a", Dimension::Completeness, "v"});
    CHECK_THROWS_AS(evaluate_detection(report, bad, t), DqError);
}

TEST_CASE("anomaly report JSON round-trip") {
    AnomalyReport r;
    r.records.push_back({4, -1, "age", Dimension::Accuracy, 87.5});
    r.records.push_back({9, 2, "", Dimension::Uniqueness, 91.0});
    r.metric_scores = {{"accuracy", 87.5}, {"uniqueness", 91.0}};
    r.global_score = 89.25;
    r.clusters = {{2, 9}};
    r.snapshot_id = "abc123";
    AnomalyReport back = AnomalyReport::from_json(r.to_json());
    CHECK(back.to_json().dump() == r.to_json().dump());
    CHECK(back.clusters == r.clusters);
    CHECK(back.snapshot_id == "abc123");
}
