#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "dq/csv.hpp"
#include "dq/error.hpp"
#include "dq/table.hpp"
#include "dq/text.hpp"

using namespace dq;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "/tmp/dq_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

Table make_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, LoadOptions opts = {}) {
    return table_from_csv_doc(header, rows, opts);
}

// Independent cell-by-cell comparison used as the diff oracle.
std::size_t brute_diff(const Table& a, const Table& b) {
    std::size_t n = 0;
    for (std::size_t c = 0; c < a.column_count(); ++c)
        for (std::size_t r = 0; r < a.row_count(); ++r)
            if (!cell_equal(a.at(r, c), b.at(r, c))) ++n;
    return n;
}

}  // namespace

TEST_CASE("load_csv basic") {
    auto path = write_temp("basic.csv", "name,age\nalice,30\nbob,41\ncarol,25\n");
    LoadOptions opts;
    opts.schema = {{"age", DeclaredKind::Numeric}};
    Table t = load_csv(path, opts);
    CHECK(t.row_count() == 3);
    CHECK(t.column_count() == 2);
    CHECK(!t.snapshot_id().empty());
    CHECK(t.at(0, 1).num == doctest::Approx(30.0));
    std::remove(path.c_str());
}

TEST_CASE("load_csv null tokens become Missing") {
    auto path = write_temp("nulls.csv", "a,b\nN/A,1\nnan, \nx,NULL\n");
    Table t = load_csv(path, {});
    CHECK(t.at(0, 0).missing());
    CHECK(t.at(1, 0).missing());
    CHECK(t.at(1, 1).missing());
    CHECK(t.at(2, 1).missing());
    CHECK(t.at(2, 0).text == "x");
    CHECK(t.at(0, 0).raw == "N/A");  // raw preserved
    std::remove(path.c_str());
}

TEST_CASE("load_csv header-only file is a valid empty table") {
    auto path = write_temp("empty.csv", "a,b,c\n");
    Table t = load_csv(path, {});
    CHECK(t.row_count() == 0);
    CHECK(t.column_count() == 3);
    std::remove(path.c_str());
}

TEST_CASE("load_csv rejects ragged rows and unknown schema columns") {
    auto path = write_temp("ragged.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(path, {}), DqError);
    std::remove(path.c_str());

    auto path2 = write_temp("schema.csv", "a,b\n1,2\n");
    LoadOptions opts;
    opts.schema = {{"zz", DeclaredKind::Numeric}};
    try {
        load_csv(path2, opts);
        FAIL("expected SchemaMismatch");
    } catch (const DqError& e) {
        CHECK(e.code() == ErrorCode::SchemaMismatch);
    }
    std::remove(path2.c_str());
}

TEST_CASE("csv quoted fields round-trip") {
    auto path = write_temp("quoted.csv", "a,b\n\"x,\"\"y\",2\n");
    csv::Document doc = csv::read_file(path);
    REQUIRE(doc.rows.size() == 1);
    CHECK(doc.rows[0][0] == "x,\"y");
    csv::Document out{doc.header, doc.rows};
    auto path2 = "/tmp/dq_test_quoted_out.csv";
    csv::write_file(path2, out);
    csv::Document again = csv::read_file(path2);
    CHECK(again.rows == doc.rows);
    std::remove(path.c_str());
    std::remove(path2);
}

TEST_CASE("sidecar metadata and timestamp validation") {
    auto csv_path = write_temp("meta.csv", "a\n1\n2\n");
    auto meta_path = write_temp(
        "meta.json",
        R"({"fields": {"a": {"access_count": 7, "accessible": false}},
            "rows": [{"created_at": "2020-01-01", "modified_at": "2020-06-01"},
                     {"created_at": "2020-02-01", "modified_at": "2020-02-01"}]})");
    LoadOptions opts;
    opts.meta_path = meta_path;
    Table t = load_csv(csv_path, opts);
    CHECK(t.column(0).access_count == 7);
    CHECK(t.column(0).accessible == false);
    REQUIRE(t.has_row_meta());
    CHECK(t.row_meta()[0].created_at < t.row_meta()[0].modified_at);

    auto bad_meta = write_temp(
        "meta_bad.json",
        R"({"rows": [{"created_at": "2021-01-01", "modified_at": "2020-01-01"},
                     {"created_at": "2020-01-01", "modified_at": "2020-01-01"}]})");
    LoadOptions bad;
    bad.meta_path = bad_meta;
    try {
        load_csv(csv_path, bad);
        FAIL("expected BadTimestamp");
    } catch (const DqError& e) {
        CHECK(e.code() == ErrorCode::BadTimestamp);
    }
    std::remove(csv_path.c_str());
    std::remove(meta_path.c_str());
    std::remove(bad_meta.c_str());
}

TEST_CASE("preprocess lowercase and symbol stripping") {
    Table t = make_table({"msg"}, {{"Good Morning!!"}});
    PreprocessOptions opts;
    opts.lowercase = true;
    opts.strip_symbols = true;
    Table p = preprocess(t, opts);
    CHECK(p.at(0, 0).text == "good morning");
    CHECK(t.at(0, 0).text == "Good Morning!!");  // input untouched
    CHECK(p.snapshot_id() != t.snapshot_id());
}

TEST_CASE("preprocess keeps date and decimal punctuation inside numeric tokens") {
    Table t = make_table({"v"}, {{"27/03/2020"}, {"3.14!"}});
    PreprocessOptions opts;
    opts.strip_symbols = true;
    Table p = preprocess(t, opts);
    CHECK(p.at(0, 0).text == "27/03/2020");
    CHECK(p.at(1, 0).text == "3.14");
}

TEST_CASE("preprocess min-max scaling") {
    LoadOptions lo;
    lo.schema = {{"x", DeclaredKind::Numeric}};
    Table t = make_table({"x"}, {{"0"}, {"5"}, {"10"}}, lo);
    PreprocessOptions opts;
    opts.minmax_scale = true;
    Table p = preprocess(t, opts);
    CHECK(p.at(0, 0).num == doctest::Approx(0.0));
    CHECK(p.at(1, 0).num == doctest::Approx(0.5));
    CHECK(p.at(2, 0).num == doctest::Approx(1.0));
}

TEST_CASE("preprocess normalizes residual null tokens") {
    Table t = make_table({"v"}, {{"ok"}});
    // simulate a value that collapses to a null token after trimming
    std::vector<Column> cols = t.columns();
    cols[0].cells[0] = Cell::make_text("  NULL ");
    Table t2(cols, {}, t.date_formats());
    PreprocessOptions opts;
    opts.normalize_nulls = true;
    Table p = preprocess(t2, opts);
    CHECK(p.at(0, 0).missing());
}

TEST_CASE("preprocess stop-word removal only on free-text columns") {
    Table t = make_table({"note", "city"}, {{"the quick fox", "the hague"}});
    PreprocessOptions opts;
    opts.remove_stopwords = true;
    opts.free_text_columns = {"note"};
    Table p = preprocess(t, opts);
    CHECK(p.at(0, 0).text == "quick fox");
    CHECK(p.at(0, 1).text == "the hague");
}

TEST_CASE("preprocess idempotence") {
    LoadOptions lo;
    lo.schema = {{"x", DeclaredKind::Numeric}};
    Table t = make_table({"txt", "x"},
                         {{"Hello, World!", "4"}, {"  N/A", "9"}, {"the end", "1"}}, lo);
    std::vector<PreprocessOptions> variants;
    for (int mask = 0; mask < 32; ++mask) {
        PreprocessOptions o;
        o.lowercase = mask & 1;
        o.strip_symbols = mask & 2;
        o.remove_stopwords = mask & 4;
        o.normalize_nulls = mask & 8;
        o.minmax_scale = mask & 16;
        o.free_text_columns = {"txt"};
        variants.push_back(o);
    }
    for (const auto& o : variants) {
        Table once = preprocess(t, o);
        Table twice = preprocess(once, o);
        REQUIRE(once.row_count() == twice.row_count());
        CHECK(brute_diff(once, twice) == 0);
    }
}

TEST_CASE("cell_kind classification") {
    auto formats = timeparse::default_formats();
    CHECK(cell_kind("12345", formats) == ValueKind::Numeric);
    CHECK(cell_kind("2020-03-27", formats) == ValueKind::Date);
    CHECK(cell_kind("05/2030", formats) == ValueKind::Date);
    CHECK(cell_kind("27/03/2020", formats) == ValueKind::Date);
    CHECK(cell_kind("AB12", formats) == ValueKind::Alphanumeric);
    CHECK(cell_kind("hello there", formats) == ValueKind::String);
    CHECK(cell_kind("-3.5e2", formats) == ValueKind::Numeric);
    CHECK(cell_kind("", formats) == ValueKind::Missing);
    CHECK(cell_kind("13/45/9999", formats) == ValueKind::Alphanumeric);
    // date takes precedence over numeric for format-matching strings
    CHECK(cell_kind("2020", formats) == ValueKind::Numeric);
}

TEST_CASE("cell_kind total and deterministic on random bytes") {
    auto formats = timeparse::default_formats();
    std::mt19937 rng(7);
    for (int i = 0; i < 500; ++i) {
        std::string s;
        int len = static_cast<int>(rng() % 12);
        for (int j = 0; j < len; ++j) s.push_back(static_cast<char>(' ' + rng() % 94));
        ValueKind k1 = cell_kind(s, formats);
        ValueKind k2 = cell_kind(s, formats);
        CHECK(k1 == k2);
    }
}

TEST_CASE("diff_count identity, single edit, full column") {
    Table t = make_table({"a", "b"}, {{"1", "x"}, {"2", "y"}});
    CHECK(diff_count(t, t) == 0);

    std::vector<Column> cols = t.columns();
    cols[1].cells[0] = Cell::make_text("z");
    Table edited(cols, {}, t.date_formats());
    CHECK(diff_count(t, edited) == 1);

    // 4x3 tables differing in one full column
    Table big = make_table({"a", "b", "c"},
                           {{"1", "p", "u"}, {"2", "q", "v"}, {"3", "r", "w"}, {"4", "s", "x"}});
    std::vector<Column> cols2 = big.columns();
    for (auto& cell : cols2[2].cells) cell = Cell::make_text(cell.text + "_changed");
    Table big2(cols2, {}, big.date_formats());
    CHECK(diff_count(big, big2) == brute_diff(big, big2));
    CHECK(diff_count(big, big2) == 4);
}

TEST_CASE("diff_count symmetry and triangle property") {
    std::mt19937 rng(11);
    auto random_table = [&rng]() {
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 6; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < 3; ++c) row.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
            rows.push_back(row);
        }
        return make_table({"c0", "c1", "c2"}, rows);
    };
    for (int i = 0; i < 30; ++i) {
        Table a = random_table(), b = random_table(), c = random_table();
        CHECK(diff_count(a, b) == diff_count(b, a));
        CHECK(diff_count(a, c) <= diff_count(a, b) + diff_count(b, c));
    }
}

TEST_CASE("diff_count rejects shape mismatches") {
    Table a = make_table({"a"}, {{"1"}});
    Table b = make_table({"a", "b"}, {{"1", "2"}});
    CHECK_THROWS_AS(diff_count(a, b), DqError);
}

TEST_CASE("Missing differs from any non-missing value") {
    Table a = make_table({"a"}, {{"1"}});
    Table b = make_table({"a"}, {{"N/A"}});
    CHECK(diff_count(a, b) == 1);
}

TEST_CASE("text utilities") {
    CHECK(text::trigram_cosine("montreal", "montreal") == doctest::Approx(1.0));
    CHECK(text::trigram_cosine("abcdef", "uvwxyz") == doctest::Approx(0.0));
    CHECK(text::levenshtein("kitten", "sitting") == 3);
    CHECK(text::edit_similarity("", "") == doctest::Approx(1.0));
}
