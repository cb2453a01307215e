#include <doctest.h>

#include <cmath>
#include <random>

#include "dq/assess.hpp"
#include "dq/error.hpp"
#include "dq/table.hpp"

using namespace dq;
using namespace dq::assess;

namespace {

Table make_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, LoadOptions opts = {}) {
    return table_from_csv_doc(header, rows, opts);
}

Table table_with_meta(std::size_t rows, const std::vector<RowMeta>& meta) {
    std::vector<Column> cols(1);
    cols[0].name = "v";
    for (std::size_t r = 0; r < rows; ++r) cols[0].cells.push_back(Cell::make_text("x"));
    return Table(std::move(cols), meta, timeparse::default_formats());
}

// Customers table (8 fields), engineered so per-field completeness hits the
// published scores {90, 90, 80, 40, 30, 20, 65, 70} with 20 rows.
Table customers_table() {
    std::vector<std::string> header = {"First Name", "Last Name", "Age",  "Address",
                                       "Email",      "Phone Number", "City", "Country"};
    std::vector<int> present = {18, 18, 16, 8, 6, 4, 13, 14};
    std::vector<std::vector<std::string>> rows(20, std::vector<std::string>(8));
    for (std::size_t c = 0; c < 8; ++c)
        for (std::size_t r = 0; r < 20; ++r)
            rows[r][c] = (static_cast<int>(r) < present[c]) ? "v" : "";
    return make_table(header, rows);
}

const std::map<std::string, int> kCustomerFactors = {
    {"First Name", 1}, {"Last Name", 1}, {"Age", 1},  {"Address", 3},
    {"Email", 6},      {"Phone Number", 4}, {"City", 2}, {"Country", 2}};

double truncate2(double v) { return std::floor(v * 100.0) / 100.0; }

}  // namespace

TEST_CASE("published completeness example: unweighted and weighted") {
    Table t = customers_table();
    double unweighted = completeness(t);
    CHECK(truncate2(unweighted) == doctest::Approx(60.62));
    CHECK(unweighted == doctest::Approx(60.625));

    auto weights = field_weights(kCustomerFactors);
    double weighted = completeness(t, weights);
    CHECK(weighted == doctest::Approx(45.5).epsilon(1e-12));
}

TEST_CASE("published field weights") {
    auto w = field_weights(kCustomerFactors);
    CHECK(w["First Name"] == doctest::Approx(0.05));
    CHECK(w["Last Name"] == doctest::Approx(0.05));
    CHECK(w["Age"] == doctest::Approx(0.05));
    CHECK(w["Address"] == doctest::Approx(0.15));
    CHECK(w["Email"] == doctest::Approx(0.3));
    CHECK(w["Phone Number"] == doctest::Approx(0.2));
    CHECK(w["City"] == doctest::Approx(0.1));
    CHECK(w["Country"] == doctest::Approx(0.1));
}

TEST_CASE("field weights: symmetry, normalization, exact rational identity") {
    auto equal = field_weights({{"a", 3}, {"b", 3}, {"c", 3}});
    for (const auto& [k, v] : equal) CHECK(v == doctest::Approx(1.0 / 3.0));

    auto single = field_weights({{"only", 7}});
    CHECK(single["only"] == doctest::Approx(1.0));

    std::mt19937 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, int> factors;
        int fields = 1 + static_cast<int>(rng() % 12);
        for (int f = 0; f < fields; ++f)
            factors["f" + std::to_string(f)] = 1 + static_cast<int>(rng() % 10);
        auto exact = field_weights_exact(factors);
        long long numer_sum = 0;
        for (const auto& [k, num] : exact.numerators) numer_sum += num;
        CHECK(numer_sum == exact.denominator);  // weights sum to exactly 1
        auto w = field_weights(factors);
        double sum = 0.0;
        for (const auto& [k, v] : w) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("field weights rejects out-of-range factors") {
    CHECK_THROWS_AS(field_weights({{"a", 0}}), DqError);
    CHECK_THROWS_AS(field_weights({{"a", 11}}), DqError);
    CHECK_THROWS_AS(field_weights({}), DqError);
}

TEST_CASE("completeness: no missing cells scores 100 and adding a missing never helps") {
    Table t = make_table({"a", "b"}, {{"1", "2"}, {"3", "4"}});
    CHECK(completeness(t) == doctest::Approx(100.0));

    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 8; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < 3; ++c) row.push_back(rng() % 4 == 0 ? "" : "v");
            rows.push_back(row);
        }
        Table base = make_table({"a", "b", "c"}, rows);
        double before = completeness(base);
        auto rows2 = rows;
        rows2[rng() % 8][rng() % 3] = "";
        Table degraded = make_table({"a", "b", "c"}, rows2);
        CHECK(completeness(degraded) <= before + 1e-12);
    }
}

TEST_CASE("completeness equal-factor weighting equals unweighted") {
    Table t = customers_table();
    std::map<std::string, int> factors;
    for (const auto& col : t.columns()) factors[col.name] = 4;
    CHECK(completeness(t, field_weights(factors)) == doctest::Approx(completeness(t)));
}

TEST_CASE("uniqueness ratios") {
    Table four = make_table({"a"}, {{"x"}, {"x"}, {"y"}, {"z"}});
    CHECK(uniqueness(four) == doctest::Approx(75.0));

    std::vector<std::vector<std::string>> same(10, {"dup"});
    CHECK(uniqueness(make_table({"a"}, same)) == doctest::Approx(10.0));

    Table distinct = make_table({"a"}, {{"1"}, {"2"}, {"3"}});
    CHECK(uniqueness(distinct) == doctest::Approx(100.0));
}

TEST_CASE("uniqueness: duplicating an existing row never increases the score") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 6; ++r)
            rows.push_back({std::string(1, static_cast<char>('a' + rng() % 3))});
        Table base = make_table({"a"}, rows);
        double before = uniqueness(base);
        rows.push_back(rows[rng() % rows.size()]);
        Table more = make_table({"a"}, rows);
        CHECK(uniqueness(more) <= before + 1e-12);
    }
}

TEST_CASE("consistency over duplicate clusters") {
    // one pair, 5 fields, 4 equal -> 80%
    Table t = make_table({"a", "b", "c", "d", "e"},
                         {{"1", "2", "3", "4", "5"}, {"1", "2", "3", "4", "9"}});
    CHECK(consistency(t, {{0, 1}}) == doctest::Approx(80.0));

    // clusters of exact copies -> 100%
    Table copies = make_table({"a", "b"}, {{"x", "y"}, {"x", "y"}, {"x", "y"}});
    CHECK(consistency(copies, {{0, 1, 2}}) == doctest::Approx(100.0));

    // two pairs with 3/5 and 5/5 agreement -> 80%
    Table two = make_table({"a", "b", "c", "d", "e"},
                           {{"1", "2", "3", "4", "5"},
                            {"1", "2", "3", "8", "9"},
                            {"p", "q", "r", "s", "t"},
                            {"p", "q", "r", "s", "t"}});
    CHECK(consistency(two, {{0, 1}, {2, 3}}) == doctest::Approx(80.0));

    CHECK(consistency(t, {}) == doctest::Approx(100.0));
    CHECK_THROWS_AS(consistency(t, {{0, 99}}), DqError);
}

TEST_CASE("conformity") {
    LoadOptions lo;
    lo.schema = {{"n", DeclaredKind::Numeric}};
    Table good = make_table({"n", "s"}, {{"1", "abc"}, {"2", "def"}}, lo);
    CHECK(conformity(good) == doctest::Approx(100.0));

    // numeric column of 10 cells with 2 text entries -> 80% for that field
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 8; ++i) rows.push_back({std::to_string(i)});
    rows.push_back({"oops"});
    rows.push_back({"bad"});
    LoadOptions lo2;
    lo2.schema = {{"n", DeclaredKind::Numeric}};
    Table mixed = make_table({"n"}, rows, lo2);
    CHECK(conformity(mixed) == doctest::Approx(80.0));

    // unparseable date entries count nonconforming
    LoadOptions lo3;
    lo3.schema = {{"d", DeclaredKind::Date}};
    Table dates = make_table({"d"}, {{"2020-01-01"}, {"13/45/9999"}}, lo3);
    CHECK(conformity(dates) == doctest::Approx(50.0));
}

TEST_CASE("timeliness and volatility") {
    int64_t now = 1000000;
    SUBCASE("modified now -> 0, modified at creation -> 100, halfway -> 50") {
        Table a = table_with_meta(1, {{0, now}});
        CHECK(timeliness(a, now) == doctest::Approx(0.0));
        Table b = table_with_meta(1, {{0, 0}});
        CHECK(timeliness(b, now) == doctest::Approx(100.0));
        Table c = table_with_meta(1, {{0, now / 2}});
        CHECK(timeliness(c, now) == doctest::Approx(50.0));
        CHECK(volatility(c, now) == doctest::Approx(-50.0));
        CHECK(volatility(b, now) == doctest::Approx(0.0));
    }
    SUBCASE("errors") {
        Table no_meta = make_table({"a"}, {{"1"}});
        CHECK_THROWS_AS(timeliness(no_meta, now), DqError);
        Table degenerate = table_with_meta(1, {{now, now}});
        CHECK_THROWS_AS(timeliness(degenerate, now), DqError);
    }
    SUBCASE("row identity volatility == timeliness - 100, exact") {
        std::mt19937_64 rng(99);
        for (int i = 0; i < 2000; ++i) {
            int64_t created = static_cast<int64_t>(rng() % 1000000);
            int64_t modified = created + static_cast<int64_t>(rng() % 500000);
            int64_t now2 = modified + 1 + static_cast<int64_t>(rng() % 500000);
            RowMeta m{created, modified};
            double t = timeliness_row(m, now2);
            double v = volatility_row(m, now2);
            CHECK(v == t - 100.0);  // exact, not approximate
            double direct = 100.0 * static_cast<double>(created - modified) /
                            static_cast<double>(now2 - created);
            CHECK(std::abs(v - direct) < 1e-9);
        }
    }
}

TEST_CASE("readability") {
    Lexicon lex;
    lex.add_word("montreal");
    lex.add_word("toronto");
    lex.add_word("ottawa");

    Table all_good = make_table({"city"}, {{"montreal"}, {"toronto"}});
    CHECK(readability(all_good, lex) == doctest::Approx(100.0));

    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 7; ++i) rows.push_back({"ottawa"});
    rows.push_back({"Moreal"});
    rows.push_back({"torontoo"});
    rows.push_back({"otawa"});
    Table some_bad = make_table({"city"}, rows);
    CHECK(readability(some_bad, lex) == doctest::Approx(70.0));

    Lexicon empty;
    CHECK_THROWS_AS(readability(all_good, empty), DqError);
}

TEST_CASE("ease of manipulation and integrity orientation") {
    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < 20; ++r) {
        std::vector<std::string> row;
        for (int c = 0; c < 5; ++c) row.push_back("v" + std::to_string(r * 5 + c));
        rows.push_back(row);
    }
    Table orig = make_table({"a", "b", "c", "d", "e"}, rows);
    CHECK(ease_of_manipulation(orig, orig) == doctest::Approx(100.0));
    CHECK(integrity(orig, orig) == doctest::Approx(100.0));

    auto rows2 = rows;
    int changed = 0;
    for (int r = 0; r < 20 && changed < 25; ++r)
        for (int c = 0; c < 5 && changed < 25; ++c) {
            rows2[r][c] = "changed";
            ++changed;
        }
    Table cleaned = make_table({"a", "b", "c", "d", "e"}, rows2);
    CHECK(ease_of_manipulation(orig, cleaned) == doctest::Approx(75.0));
    CHECK(ease_of_manipulation(orig, cleaned, /*literal=*/true) == doctest::Approx(25.0));

    auto rows3 = rows;
    for (auto& row : rows3)
        for (auto& v : row) v = "rewritten";
    Table rewritten = make_table({"a", "b", "c", "d", "e"}, rows3);
    CHECK(ease_of_manipulation(orig, rewritten) == doctest::Approx(0.0));
    CHECK(integrity(orig, rewritten, /*literal=*/true) == doctest::Approx(100.0));
}

TEST_CASE("relevancy") {
    auto with_access = [](std::vector<int64_t> counts) {
        std::vector<Column> cols(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) {
            cols[i].name = "f" + std::to_string(i);
            cols[i].access_count = counts[i];
            cols[i].cells.push_back(Cell::make_text("x"));
        }
        return Table(std::move(cols), {}, timeparse::default_formats());
    };
    // one field holds all accesses, uniform weights over 4 fields
    CHECK(relevancy(with_access({40, 0, 0, 0})) == doctest::Approx(25.0));
    // equal access -> each field 100/n, total 100/n under uniform weights
    Table equal = with_access({5, 5, 5, 5});
    CHECK(relevancy(equal) == doctest::Approx(25.0));
    CHECK_THROWS_AS(relevancy(with_access({0, 0})), DqError);
}

TEST_CASE("security is 20 x true-count over all 32 states") {
    for (int mask = 0; mask < 32; ++mask) {
        SecurityChecklist c;
        c.policy_compliance = mask & 1;
        c.transfer_protocols = mask & 2;
        c.threat_detection = mask & 4;
        c.encryption = mask & 8;
        c.documentation = mask & 16;
        int bits = __builtin_popcount(static_cast<unsigned>(mask));
        CHECK(security(c) == doctest::Approx(20.0 * bits));
    }
}

TEST_CASE("accessibility") {
    auto with_flags = [](std::vector<bool> flags) {
        std::vector<Column> cols(flags.size());
        for (std::size_t i = 0; i < flags.size(); ++i) {
            cols[i].name = "f" + std::to_string(i);
            cols[i].accessible = flags[i];
            for (int r = 0; r < 4; ++r) cols[i].cells.push_back(Cell::make_text("x"));
        }
        return Table(std::move(cols), {}, timeparse::default_formats());
    };
    CHECK(accessibility(with_flags({true, true, true, true})) == doctest::Approx(100.0));
    CHECK(accessibility(with_flags({true, true, true, false})) == doctest::Approx(75.0));
    CHECK(accessibility(with_flags({false, false})) == doctest::Approx(0.0));
}

TEST_CASE("aspect scores") {
    WeightConfig cfg = WeightConfig::thesis_defaults();
    std::map<std::string, double> metrics = {
        {metric::kCompleteness, 70}, {metric::kUniqueness, 70}, {metric::kConsistency, 70},
        {metric::kConformity, 70},   {metric::kTimeliness, 70}, {metric::kVolatility, 70},
        {metric::kReadability, 70},  {metric::kEase, 70},       {metric::kRelevancy, 70},
        {metric::kSecurity, 70},     {metric::kAccessibility, 70}, {metric::kIntegrity, 70}};

    SUBCASE("all metrics equal k -> every aspect k") {
        auto aspects = aspect_scores(metrics, cfg);
        for (const auto& [name, v] : aspects) CHECK(v == doctest::Approx(70.0));
    }
    SUBCASE("availability weighted mean") {
        metrics[metric::kSecurity] = 50;
        metrics[metric::kAccessibility] = 100;
        auto aspects = aspect_scores(metrics, cfg);
        CHECK(aspects["availability"] == doctest::Approx(60.0));  // 0.8*50 + 0.2*100
    }
    SUBCASE("single-metric aspect equals the metric") {
        WeightConfig solo;
        solo.metric_weights = {{"only", {{metric::kSecurity, 1.0}}}};
        solo.aspect_weights = {{"only", 1.0}};
        metrics[metric::kSecurity] = 42.5;
        auto aspects = aspect_scores(metrics, solo);
        CHECK(aspects["only"] == doctest::Approx(42.5));
    }
    SUBCASE("missing metric throws") {
        metrics.erase(metric::kSecurity);
        CHECK_THROWS_AS(aspect_scores(metrics, cfg), DqError);
    }
    SUBCASE("invariance under uniform weight rescaling") {
        auto base = aspect_scores(metrics, cfg);
        WeightConfig scaled = cfg;
        for (auto& [aspect, ws] : scaled.metric_weights)
            for (auto& [m, w] : ws) w *= 7.5;
        auto rescaled = aspect_scores(metrics, scaled);
        for (const auto& [name, v] : base) CHECK(rescaled[name] == doctest::Approx(v));
    }
}

TEST_CASE("global score") {
    WeightConfig cfg = WeightConfig::thesis_defaults();
    std::map<std::string, double> aspects = {{"reliability", 80},
                                             {"availability", 60},
                                             {"pertinence", 70},
                                             {"validity", 50},
                                             {"usability", 90}};
    // 0.3*80 + 0.1*60 + 0.1*70 + 0.3*50 + 0.2*90 = 70
    CHECK(global_score(aspects, cfg) == doctest::Approx(70.0));

    WeightConfig uniform = cfg;
    for (auto& [a, w] : uniform.aspect_weights) w = 1.0;
    CHECK(global_score(aspects, uniform) == doctest::Approx((80 + 60 + 70 + 50 + 90) / 5.0));

    std::map<std::string, double> constant;
    for (const auto& [a, w] : cfg.aspect_weights) constant[a] = 58.35;
    CHECK(global_score(constant, cfg) == doctest::Approx(58.35));

    aspects.erase("validity");
    CHECK_THROWS_AS(global_score(aspects, cfg), DqError);
}

TEST_CASE("metric bounds on random tables") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 12; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < 4; ++c) {
                int pick = static_cast<int>(rng() % 5);
                if (pick == 0) row.push_back("");
                else if (pick == 1) row.push_back(std::to_string(rng() % 100));
                else if (pick == 2) row.push_back("word");
                else if (pick == 3) row.push_back("mix12");
                else row.push_back("2020-01-01");
            }
            rows.push_back(row);
        }
        LoadOptions lo;
        lo.schema = {{"a", DeclaredKind::Numeric}, {"b", DeclaredKind::String},
                     {"c", DeclaredKind::Date}};
        Table t = make_table({"a", "b", "c", "d"}, rows, lo);
        for (double score : {completeness(t), uniqueness(t), conformity(t), accessibility(t)}) {
            CHECK(score >= 0.0);
            CHECK(score <= 100.0);
        }
    }
}

TEST_CASE("quality report JSON round-trip") {
    QualityReport r;
    r.metric_scores = {{metric::kCompleteness, 91.5}, {metric::kSecurity, 60.0}};
    r.aspect_scores = {{"usability", 91.5}};
    r.global_score = 77.25;
    r.weights_used = WeightConfig::thesis_defaults();
    r.evaluated_at = 1700000000;
    auto j = r.to_json();
    QualityReport back = QualityReport::from_json(j);
    CHECK(back.metric_scores == r.metric_scores);
    CHECK(back.global_score == doctest::Approx(r.global_score));
    CHECK(back.weights_used == r.weights_used);
    CHECK(back.evaluated_at == r.evaluated_at);
}
