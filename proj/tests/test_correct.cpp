#include <doctest.h>

#include <cmath>
#include <set>

#include "dq/correct.hpp"
#include "dq/correlate.hpp"
#include "dq/embed.hpp"
#include "dq/error.hpp"
#include "dq/gbt.hpp"
#include "dq/rng.hpp"

using namespace dq;
using namespace dq::correct;

namespace {

Table make_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, LoadOptions opts = {}) {
    return table_from_csv_doc(header, rows, opts);
}

anomaly::AnomalyRecord record(std::size_t row, const std::string& col, Dimension dim) {
    anomaly::AnomalyRecord r;
    r.row = static_cast<uint32_t>(row);
    r.column = col;
    r.dimension = dim;
    r.score = 100.0;
    return r;
}

anomaly::AnomalyReport report_for(const Table& t, std::vector<anomaly::AnomalyRecord> records,
                                  std::vector<er::DuplicateCluster> clusters = {}) {
    anomaly::AnomalyReport rep;
    rep.records = std::move(records);
    rep.clusters = std::move(clusters);
    rep.snapshot_id = t.snapshot_id();
    return rep;
}

}  // namespace

TEST_CASE("booster: constant target and monotone training error") {
    gbt::Params p;
    p.dropout_rate = 0.0;
    p.rounds = 50;

    std::vector<float> x = {1, 2, 3, 4};
    std::vector<double> y = {7, 7, 7, 7};
    auto constant = gbt::Booster::train(x, 4, 1, y, p);
    for (float v : {0.5f, 2.5f, 9.0f})
        CHECK(constant.predict(std::vector<float>{v}) == doctest::Approx(7.0));

    Rng rng(3);
    for (int task = 0; task < 5; ++task) {
        std::size_t n = 80;
        std::vector<float> xs(n * 2);
        std::vector<double> ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i * 2] = static_cast<float>(rng.normal());
            xs[i * 2 + 1] = static_cast<float>(rng.normal());
            ys[i] = std::sin(xs[i * 2]) + 0.5 * xs[i * 2 + 1] + 0.1 * rng.normal();
        }
        std::vector<double> mse;
        gbt::Booster::train(xs, n, 2, ys, p, &mse);
        REQUIRE(mse.size() == 50);
        for (std::size_t r = 1; r < mse.size(); ++r) CHECK(mse[r] <= mse[r - 1] + 1e-12);
    }
}

TEST_CASE("gbt categorical: deterministic function learned exactly") {
    // target is a function of one encoded feature
    std::vector<float> x;
    std::vector<std::string> labels;
    const char* classes[] = {"alpha", "beta", "gamma", "delta"};
    for (int rep = 0; rep < 25; ++rep)
        for (int c = 0; c < 4; ++c) {
            x.push_back(static_cast<float>(c));
            labels.push_back(classes[c]);
        }
    gbt::Params p;
    auto model = gbt::GbtModel::train_categorical(x, labels.size(), 1, labels, p);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto pred = model.predict(std::vector<float>{x[i]});
        if (pred.value == labels[i]) ++correct;
        CHECK(pred.confidence > 0.0);
        CHECK(pred.confidence <= 1.0);
    }
    CHECK(correct == labels.size());  // training accuracy 1.0
}

TEST_CASE("gbt binned: cohort ages land in the cohort's bin") {
    Rng rng(11);
    std::vector<float> x;
    std::vector<double> ages;
    for (int i = 0; i < 150; ++i) {
        bool young = i % 2 == 0;
        x.push_back(young ? 0.0f : 1.0f);
        ages.push_back(young ? rng.normal(27.0, 1.5) : rng.normal(55.0, 2.0));
    }
    gbt::Params p;
    auto model = gbt::GbtModel::train_binned(x, ages.size(), 1, ages, 10, p);
    auto pred = model.predict(std::vector<float>{0.0f});
    CHECK(pred.binned);
    CHECK(pred.bin_lo <= 27.0);
    CHECK(27.0 <= pred.bin_hi + 3.0);  // the young cohort's bin covers ~27
    CHECK(pred.value.front() == '[');
    auto old_pred = model.predict(std::vector<float>{1.0f});
    CHECK(old_pred.bin_lo > pred.bin_lo);
}

TEST_CASE("gbt ties break to the lexicographically smallest class") {
    // zero features: every class booster predicts its base rate; equal
    // frequencies give equal scores
    std::vector<float> x;  // d = 0
    std::vector<std::string> labels = {"b", "a", "b", "a"};
    gbt::Params p;
    auto model = gbt::GbtModel::train_categorical(x, 4, 0, labels, p);
    auto pred = model.predict(std::span<const float>{});
    CHECK(pred.value == "a");
}

TEST_CASE("correlation measures") {
    std::vector<double> xs, ys;
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        double v = rng.normal();
        xs.push_back(v);
        ys.push_back(3.0 * v - 1.0);
    }
    CHECK(correlate::pearson(xs, ys) == doctest::Approx(1.0));

    std::vector<std::string> cats;
    std::vector<double> vals;
    for (int i = 0; i < 300; ++i) {
        bool a = i % 2 == 0;
        cats.push_back(a ? "a" : "b");
        vals.push_back(a ? rng.normal(10, 1) : rng.normal(30, 1));
    }
    CHECK(correlate::correlation_ratio(cats, vals) > 0.9);

    std::vector<std::string> left, right, noise;
    for (int i = 0; i < 400; ++i) {
        left.push_back(i % 2 ? "x" : "y");
        right.push_back(i % 2 ? "p" : "q");
        noise.push_back(rng.below(2) ? "p" : "q");
    }
    CHECK(correlate::cramers_v(left, right) == doctest::Approx(1.0));
    CHECK(correlate::cramers_v(left, noise) < 0.2);
}

TEST_CASE("correlated_features keeps strong, drops weak, falls back to all") {
    LoadOptions lo;
    lo.schema = {{"target", DeclaredKind::Numeric},
                 {"copy", DeclaredKind::Numeric},
                 {"noise", DeclaredKind::Numeric}};
    Rng rng(7);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 400; ++i) {
        double v = rng.normal();
        rows.push_back({std::to_string(v), std::to_string(v), std::to_string(rng.normal())});
    }
    Table t = make_table({"target", "copy", "noise"}, rows, lo);
    CorrectionConfig cfg;
    auto features = correlated_features(t, "target", cfg);
    CHECK(std::find(features.begin(), features.end(), "copy") != features.end());
    CHECK(std::find(features.begin(), features.end(), "noise") == features.end());

    // all-weak: every feature retained
    LoadOptions lo2;
    lo2.schema = {{"t", DeclaredKind::Numeric},
                  {"n1", DeclaredKind::Numeric},
                  {"n2", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows2;
    for (int i = 0; i < 400; ++i)
        rows2.push_back({std::to_string(rng.normal()), std::to_string(rng.normal()),
                         std::to_string(rng.normal())});
    Table weak = make_table({"t", "n1", "n2"}, rows2, lo2);
    auto all = correlated_features(weak, "t", cfg);
    CHECK(all.size() == 2);

    // manual overrides apply last
    CorrectionConfig blocked = cfg;
    blocked.feature_block["target"] = {"copy"};
    auto few = correlated_features(t, "target", blocked);
    CHECK(std::find(few.begin(), few.end(), "copy") == few.end());

    Table single = make_table({"only"}, {{"1"}});
    CHECK_THROWS_AS(correlated_features(single, "only", cfg), DqError);
}

TEST_CASE("embedding maps variant renderings onto canonical neighbors") {
    // class driven by deck; "1" appears in deck-a rows like "first" does
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 60; ++i) {
        bool a = i % 2 == 0;
        rows.push_back({a ? "first" : "second", a ? "deck a" : "deck b"});
    }
    rows.push_back({"1", "deck a"});
    rows.push_back({"1", "deck a"});
    Table t = make_table({"class", "deck"}, rows);
    embed::ColumnEmbedding emb(t, 0, {1}, 32, 9);
    double to_first = emb.similarity("1", "first");
    double to_second = emb.similarity("1", "second");
    CHECK(to_first > 0.8);
    CHECK(to_first > to_second + 0.3);
}

TEST_CASE("select_neighborhood per dimension") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows = {
        {"montreal", "30"}, {"montreal", "31"}, {"toronto", "40"},
        {"", "33"},         {"Moreal", "29"},
    };
    Table t = make_table({"city", "age"}, rows, lo);
    CorrectionConfig cfg;
    Lexicon lex;
    lex.add_word("montreal");
    lex.add_word("toronto");

    std::set<std::pair<std::size_t, std::size_t>> flagged = {{3, 0}, {4, 0}};

    SUBCASE("completeness: all populated clean rows in the column") {
        auto rows_sel = select_neighborhood(t, record(3, "city", Dimension::Completeness), cfg,
                                            &lex, flagged, {});
        CHECK(rows_sel == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("readability: rows matching the nearest lexicon value") {
        auto rows_sel = select_neighborhood(t, record(4, "city", Dimension::Readability), cfg,
                                            &lex, flagged, {});
        CHECK(rows_sel == std::vector<std::size_t>{0, 1});  // the montreal rows
    }
    SUBCASE("uniqueness: the cluster's own rows") {
        auto rows_sel = select_neighborhood(t, record(1, "", Dimension::Uniqueness), cfg, &lex,
                                            flagged, {{0, 1}});
        CHECK(rows_sel == std::vector<std::size_t>{0, 1});
    }
}

TEST_CASE("correct_all: empty report leaves the table untouched") {
    Table t = make_table({"a", "b"}, {{"x", "1"}, {"y", "2"}});
    CorrectionConfig cfg;
    auto result = correct_all(t, report_for(t, {}), cfg, nullptr);
    CHECK(result.log.empty());
    CHECK(diff_count(t, result.corrected) == 0);
}

TEST_CASE("correct_all rejects stale reports") {
    Table t = make_table({"a"}, {{"x"}});
    anomaly::AnomalyReport rep;
    rep.snapshot_id = "someone-else";
    CorrectionConfig cfg;
    CHECK_THROWS_AS(correct_all(t, rep, cfg, nullptr), DqError);
}

TEST_CASE("correct_all fills a missing categorical cell from its cohort") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 40; ++i) {
        bool young = i % 2 == 0;
        rows.push_back({young ? "junior" : "senior", young ? "25" : "58"});
    }
    rows.push_back({"", "26"});  // missing grade, clearly in the junior cohort
    Table t = make_table({"grade", "age"}, rows, lo);
    CorrectionConfig cfg;
    auto rep = report_for(t, {record(40, "grade", Dimension::Completeness)});
    auto result = correct_all(t, rep, cfg, nullptr);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].new_value == "junior");
    CHECK(result.log[0].dimension == Dimension::Completeness);
    CHECK(result.corrected.at(40, 0).text == "junior");
    // non-interference: only the flagged cell changed
    CHECK(diff_count(t, result.corrected) == 1);
}

TEST_CASE("correct_all remaps a nonconforming value onto the canonical form") {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 60; ++i) {
        bool a = i % 2 == 0;
        rows.push_back({a ? "first" : "second", a ? "deck a" : "deck b"});
    }
    rows.push_back({"1", "deck a"});
    Table t = make_table({"class", "deck"}, rows);
    CorrectionConfig cfg;
    auto rep = report_for(t, {record(60, "class", Dimension::Conformity)});
    auto result = correct_all(t, rep, cfg, nullptr);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].new_value == "first");
    CHECK(result.corrected.at(60, 0).text == "first");
}

TEST_CASE("correct_all fixes a misspelling via the lexicon neighborhood") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({i % 3 ? "montreal" : "toronto", "30"});
    rows.push_back({"Moreal", "31"});
    Table t = make_table({"city", "age"}, rows, lo);
    Lexicon lex;
    lex.add_word("montreal");
    lex.add_word("toronto");
    CorrectionConfig cfg;
    auto rep = report_for(t, {record(30, "city", Dimension::Readability)});
    auto result = correct_all(t, rep, cfg, &lex);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].new_value == "montreal");
}

TEST_CASE("correct_all imputes an outlier age into a sane bin") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    Rng rng(13);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 120; ++i) {
        bool young = i % 2 == 0;
        rows.push_back({young ? "junior" : "senior",
                        std::to_string(young ? rng.normal(26, 2) : rng.normal(57, 2))});
    }
    rows.push_back({"junior", "300"});  // outlier
    Table t = make_table({"grade", "age"}, rows, lo);
    CorrectionConfig cfg;
    auto rep = report_for(t, {record(120, "age", Dimension::Accuracy)});
    auto result = correct_all(t, rep, cfg, nullptr);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].has_bin);
    CHECK(result.log[0].old_value == "300");
    double fixed = result.corrected.at(120, 1).num;
    CHECK(fixed < 100.0);  // pulled back into the observed range
    CHECK(result.log[0].bin_lo <= fixed);
}

TEST_CASE("correct_all consolidates duplicate clusters") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    std::vector<std::vector<std::string>> rows = {
        {"ann lee", "rome", "30"},
        {"ann lee", "rome", "30"},
        {"ann lee", "roma", "30"},  // conflicting city (minority value)
        {"bob roy", "", "41"},
        {"bob roy", "oslo", ""},
        {"cat day", "bern", "50"},
    };
    Table t = make_table({"name", "city", "age"}, rows, lo);
    CorrectionConfig cfg;
    auto rep = report_for(t, {}, {{0, 1, 2}, {3, 4}});
    auto result = correct_all(t, rep, cfg, nullptr);

    // 6 rows - 5 retired + 2 merged = 3 rows
    REQUIRE(result.corrected.row_count() == 3);
    CHECK(result.corrected.at(0, 0).text == "cat day");

    // merged ann row keeps the majority city
    CHECK(result.corrected.at(1, 0).text == "ann lee");
    CHECK(result.corrected.at(1, 1).text == "rome");

    // complementary missing cells fill from the populated member
    CHECK(result.corrected.at(2, 0).text == "bob roy");
    CHECK(result.corrected.at(2, 1).text == "oslo");
    CHECK(!result.corrected.at(2, 2).missing());

    std::size_t retirements = 0;
    for (const auto& e : result.log)
        if (e.new_value == "retired") ++retirements;
    CHECK(retirements == 5);
}

TEST_CASE("correct_all is deterministic") {
    LoadOptions lo;
    lo.schema = {{"age", DeclaredKind::Numeric}};
    Rng rng(19);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 50; ++i)
        rows.push_back({i % 2 ? "red" : "blue", std::to_string(rng.normal(40, 10))});
    rows[7][0] = "";
    rows[21][1] = "";
    Table t = make_table({"color", "age"}, rows, lo);
    auto rep = report_for(t, {record(7, "color", Dimension::Completeness),
                              record(21, "age", Dimension::Completeness)});
    CorrectionConfig cfg;
    auto r1 = correct_all(t, rep, cfg, nullptr);
    auto r2 = correct_all(t, rep, cfg, nullptr);
    CHECK(diff_count(r1.corrected, r2.corrected) == 0);
    REQUIRE(r1.log.size() == r2.log.size());
    for (std::size_t i = 0; i < r1.log.size(); ++i)
        CHECK(r1.log[i].to_json().dump() == r2.log[i].to_json().dump());
}

TEST_CASE("evaluate_correction grading") {
    std::vector<ChangeLogEntry> log;
    ChangeLogEntry a;
    a.row = 1;
    a.column = "city";
    a.dimension = Dimension::Readability;
    a.new_value = "montreal";
    log.push_back(a);
    ChangeLogEntry b;
    b.row = 2;
    b.column = "age";
    b.dimension = Dimension::Completeness;
    b.new_value = "27.5";
    b.has_bin = true;
    b.bin_lo = 20.0;
    b.bin_hi = 30.0;
    b.bin_label = "[20,30)";
    log.push_back(b);

    GroundTruth truth;
    truth.entries.push_back({1, "city", Dimension::Readability, "Montreal"});
    truth.entries.push_back({2, "age", Dimension::Completeness, "24"});
    auto eval = evaluate_correction(log, truth);
    CHECK(eval.total == 2);
    CHECK(eval.correct == 2);  // case-insensitive match; 24 inside [20,30)
    CHECK(eval.accuracy == doctest::Approx(1.0));
    CHECK(eval.accuracy + eval.error_rate == doctest::Approx(1.0));

    truth.entries[1].original_value = "55";  // outside the bin
    auto eval2 = evaluate_correction(log, truth);
    CHECK(eval2.accuracy == doctest::Approx(0.5));
    CHECK(eval2.accuracy + eval2.error_rate == doctest::Approx(1.0));

    GroundTruth dup;
    dup.entries.push_back({1, "city", Dimension::Readability, "x"});
    dup.entries.push_back({1, "city", Dimension::Readability, "y"});
    CHECK_THROWS_AS(evaluate_correction(log, dup), DqError);
}

TEST_CASE("evaluate_correction follows retired rows to merged predictions") {
    std::vector<ChangeLogEntry> log;
    ChangeLogEntry retired;
    retired.row = 5;
    retired.dimension = Dimension::Uniqueness;
    retired.new_value = "retired";
    retired.model_id = "consolidate:0";
    log.push_back(retired);
    ChangeLogEntry merged;
    merged.row = 10;
    merged.output_row = true;
    merged.column = "city";
    merged.dimension = Dimension::Consistency;
    merged.new_value = "rome";
    merged.model_id = "consolidate:0:city";
    log.push_back(merged);

    GroundTruth truth;
    truth.entries.push_back({5, "city", Dimension::Consistency, "rome"});
    auto eval = evaluate_correction(log, truth);
    CHECK(eval.total == 1);
    CHECK(eval.correct == 1);
}

TEST_CASE("quality_improvement deltas") {
    assess::QualityReport before, after;
    before.weights_used = assess::WeightConfig::thesis_defaults();
    after.weights_used = before.weights_used;
    before.metric_scores = {{"completeness", 80.0}, {"conformity", 95.0}};
    after.metric_scores = {{"completeness", 100.0}, {"conformity", 95.0}};
    before.global_score = 72.0;
    after.global_score = 78.5;
    auto delta = quality_improvement(before, after);
    CHECK(delta.metric_deltas["completeness"] == doctest::Approx(20.0));
    CHECK(delta.metric_deltas["conformity"] == doctest::Approx(0.0));
    CHECK(delta.improvement_rate == doctest::Approx(6.5));

    auto same = quality_improvement(before, before);
    CHECK(same.improvement_rate == doctest::Approx(0.0));

    after.weights_used.aspect_weights["validity"] = 0.99;
    CHECK_THROWS_AS(quality_improvement(before, after), DqError);
}

TEST_CASE("changelog JSONL round-trip") {
    std::vector<ChangeLogEntry> log;
    ChangeLogEntry e;
    e.row = 3;
    e.column = "age";
    e.dimension = Dimension::Accuracy;
    e.old_value = "300";
    e.new_value = "41.2";
    e.confidence = 0.87;
    e.model_id = "impute:age";
    e.has_bin = true;
    e.bin_lo = 40.0;
    e.bin_hi = 45.0;
    e.bin_label = "[40,45)";
    log.push_back(e);
    write_changelog("/tmp/dq_test_changes.jsonl", log);
    auto back = read_changelog("/tmp/dq_test_changes.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].to_json().dump() == log[0].to_json().dump());
    std::remove("/tmp/dq_test_changes.jsonl");
}
