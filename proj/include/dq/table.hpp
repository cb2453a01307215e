#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dq/timeparse.hpp"

namespace dq {

enum class DeclaredKind { Numeric, String, Date };

enum class ValueKind { Numeric, String, Date, Alphanumeric, Missing };

const char* to_string(DeclaredKind k);
const char* to_string(ValueKind k);
std::optional<DeclaredKind> declared_kind_from_name(std::string_view name);

/// One table cell. `raw` is the text as ingested and never changes; `value`
/// (the tag + payload) is what transformations rewrite.
struct Cell {
    enum class Tag : uint8_t { Missing, Number, Text, Timestamp };

    std::string raw;
    Tag tag = Tag::Missing;
    double num = 0.0;
    int64_t ts = 0;
    std::string text;

    bool missing() const { return tag == Tag::Missing; }

    static Cell make_missing(std::string raw_text = "");
    static Cell make_number(double v);
    static Cell make_text(std::string v);
    static Cell make_timestamp(int64_t epoch);

    /// Textual rendering of the current value; "" for Missing.
    std::string content() const;
};

bool cell_equal(const Cell& a, const Cell& b);

struct Column {
    std::string name;
    DeclaredKind declared_kind = DeclaredKind::String;
    std::vector<Cell> cells;
    int64_t access_count = 0;
    bool accessible = true;
    bool free_text = false;
};

struct RowMeta {
    int64_t created_at = 0;
    int64_t modified_at = 0;
};

class Table {
public:
    Table() = default;
    Table(std::vector<Column> columns, std::vector<RowMeta> row_meta,
          std::vector<timeparse::Format> date_formats);

    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t i) const { return columns_[i]; }
    std::size_t column_count() const { return columns_.size(); }
    std::size_t row_count() const { return columns_.empty() ? 0 : columns_[0].cells.size(); }
    std::size_t cell_count() const { return row_count() * column_count(); }

    bool has_row_meta() const { return !row_meta_.empty(); }
    const std::vector<RowMeta>& row_meta() const { return row_meta_; }

    const std::vector<timeparse::Format>& date_formats() const { return date_formats_; }
    const std::string& snapshot_id() const { return snapshot_id_; }

    std::optional<std::size_t> column_index(std::string_view name) const;
    const Cell& at(std::size_t row, std::size_t col) const { return columns_[col].cells[row]; }

    /// Value kind of a cell under this table's date formats.
    ValueKind kind_at(std::size_t row, std::size_t col) const;

    bool same_schema(const Table& other) const;

private:
    std::vector<Column> columns_;
    std::vector<RowMeta> row_meta_;
    std::vector<timeparse::Format> date_formats_;
    std::string snapshot_id_;
};

struct LoadOptions {
    std::map<std::string, DeclaredKind> schema;                // header name -> kind
    std::set<std::string> null_tokens = default_null_tokens();  // lowercase, trimmed
    std::vector<timeparse::Format> date_formats = timeparse::default_formats();
    std::optional<int64_t> now;  // when set, row_meta with modified_at > now is rejected
    std::string meta_path;       // optional JSON sidecar

    static std::set<std::string> default_null_tokens();
};

/// CSV ingestion. Header row mandatory; schema names must be a subset of the
/// header; unlisted columns default to String.
Table load_csv(const std::string& path, const LoadOptions& opts);
Table table_from_csv_doc(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const LoadOptions& opts);

struct PreprocessOptions {
    bool lowercase = false;
    bool strip_symbols = false;
    bool remove_stopwords = false;
    bool normalize_nulls = false;
    bool minmax_scale = false;
    std::set<std::string> free_text_columns;  // stop-word removal applies here only
    std::set<std::string> stopwords = default_stopwords();
    std::set<std::string> null_tokens = LoadOptions::default_null_tokens();

    static std::set<std::string> default_stopwords();
};

/// Pure transformation; the input table is untouched.
Table preprocess(const Table& t, const PreprocessOptions& opts);

/// Classifier used by conformity metrics and patterns. Order is fixed:
/// Missing, then Date (first matching format), then Numeric, then String
/// (alphabetic plus spaces), then Alphanumeric.
ValueKind cell_kind(std::string_view raw, const std::vector<timeparse::Format>& date_formats);

/// Full-string number scan: sign, digits, one decimal point, optional
/// exponent. No locale commas, no inf/nan words.
bool parse_number(std::string_view s, double& out);

/// Cells whose normalized values differ, rows aligned by index.
std::size_t diff_count(const Table& a, const Table& b);

/// Replaces cell values (same shape) keeping schema, formats and row_meta;
/// used by the correction engine to materialize its overlay.
Table with_cells(const Table& base, std::vector<std::vector<Cell>> cells_by_column);

/// Drops the given rows (sorted set of indices) from table and row_meta.
Table drop_rows(const Table& base, const std::vector<std::size_t>& rows);

/// Appends rows (cells indexed [row][col]) with optional row_meta entries.
Table append_rows(const Table& base, const std::vector<std::vector<Cell>>& rows,
                  const std::vector<RowMeta>& meta);

}  // namespace dq
