#include "dq/table.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dq/csv.hpp"
#include "dq/error.hpp"
#include "dq/text.hpp"

namespace dq {

namespace {

void hash_bytes(uint64_t& h, std::string_view s) {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
}

void hash_u64(uint64_t& h, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= 1099511628211ull;
    }
}

std::string compute_snapshot_id(const std::vector<Column>& cols, const std::vector<RowMeta>& meta) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& c : cols) {
        hash_bytes(h, c.name);
        hash_u64(h, static_cast<uint64_t>(c.declared_kind));
        for (const auto& cell : c.cells) {
            hash_u64(h, static_cast<uint64_t>(cell.tag));
            switch (cell.tag) {
                case Cell::Tag::Missing: break;
                case Cell::Tag::Number: {
                    uint64_t bits;
                    static_assert(sizeof(bits) == sizeof(cell.num));
                    std::memcpy(&bits, &cell.num, sizeof(bits));
                    hash_u64(h, bits);
                    break;
                }
                case Cell::Tag::Text: hash_bytes(h, cell.text); break;
                case Cell::Tag::Timestamp: hash_u64(h, static_cast<uint64_t>(cell.ts)); break;
            }
        }
    }
    for (const auto& m : meta) {
        hash_u64(h, static_cast<uint64_t>(m.created_at));
        hash_u64(h, static_cast<uint64_t>(m.modified_at));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool is_alpha_space(std::string_view s) {
    bool has_alpha = false;
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalpha(u)) has_alpha = true;
        else if (!std::isspace(u)) return false;
    }
    return has_alpha;
}

}  // namespace

const char* to_string(DeclaredKind k) {
    switch (k) {
        case DeclaredKind::Numeric: return "numeric";
        case DeclaredKind::String: return "string";
        case DeclaredKind::Date: return "date";
    }
    return "?";
}

const char* to_string(ValueKind k) {
    switch (k) {
        case ValueKind::Numeric: return "numeric";
        case ValueKind::String: return "string";
        case ValueKind::Date: return "date";
        case ValueKind::Alphanumeric: return "alphanumeric";
        case ValueKind::Missing: return "missing";
    }
    return "?";
}

std::optional<DeclaredKind> declared_kind_from_name(std::string_view name) {
    if (name == "numeric") return DeclaredKind::Numeric;
    if (name == "string") return DeclaredKind::String;
    if (name == "date") return DeclaredKind::Date;
    return std::nullopt;
}

Cell Cell::make_missing(std::string raw_text) {
    Cell c;
    c.raw = std::move(raw_text);
    c.tag = Tag::Missing;
    return c;
}

Cell Cell::make_number(double v) {
    Cell c;
    c.tag = Tag::Number;
    c.num = v;
    std::ostringstream os;
    os << v;
    c.raw = os.str();
    return c;
}

Cell Cell::make_text(std::string v) {
    Cell c;
    c.tag = Tag::Text;
    c.raw = v;
    c.text = std::move(v);
    return c;
}

Cell Cell::make_timestamp(int64_t epoch) {
    Cell c;
    c.tag = Tag::Timestamp;
    c.ts = epoch;
    c.raw = timeparse::format_iso(epoch);
    return c;
}

std::string Cell::content() const {
    switch (tag) {
        case Tag::Missing: return "";
        case Tag::Text: return text;
        case Tag::Timestamp: return timeparse::format_iso(ts);
        case Tag::Number: {
            std::ostringstream os;
            os.precision(15);
            os << num;
            return os.str();
        }
    }
    return "";
}

bool cell_equal(const Cell& a, const Cell& b) {
    if (a.tag != b.tag) return false;
    switch (a.tag) {
        case Cell::Tag::Missing: return true;
        case Cell::Tag::Number: return a.num == b.num;
        case Cell::Tag::Text: return a.text == b.text;
        case Cell::Tag::Timestamp: return a.ts == b.ts;
    }
    return false;
}

Table::Table(std::vector<Column> columns, std::vector<RowMeta> row_meta,
             std::vector<timeparse::Format> date_formats)
    : columns_(std::move(columns)),
      row_meta_(std::move(row_meta)),
      date_formats_(std::move(date_formats)) {
    std::size_t rows = columns_.empty() ? 0 : columns_[0].cells.size();
    for (const auto& c : columns_) {
        if (c.cells.size() != rows)
            fail(ErrorCode::ShapeMismatch, "column '" + c.name + "' length mismatch");
    }
    if (!row_meta_.empty() && row_meta_.size() != rows)
        fail(ErrorCode::ShapeMismatch, "row_meta length mismatch");
    snapshot_id_ = compute_snapshot_id(columns_, row_meta_);
}

std::optional<std::size_t> Table::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

ValueKind Table::kind_at(std::size_t row, std::size_t col) const {
    const Cell& c = columns_[col].cells[row];
    switch (c.tag) {
        case Cell::Tag::Missing: return ValueKind::Missing;
        case Cell::Tag::Number: return ValueKind::Numeric;
        case Cell::Tag::Timestamp: return ValueKind::Date;
        case Cell::Tag::Text: return cell_kind(c.text, date_formats_);
    }
    return ValueKind::Missing;
}

bool Table::same_schema(const Table& other) const {
    if (columns_.size() != other.columns_.size()) return false;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name != other.columns_[i].name) return false;
        if (columns_[i].declared_kind != other.columns_[i].declared_kind) return false;
    }
    return true;
}

std::set<std::string> LoadOptions::default_null_tokens() {
    return {"", "n/a", "na", "null", "nan"};
}

std::set<std::string> PreprocessOptions::default_stopwords() {
    return {"a",  "an", "and", "are", "as", "at",  "be", "by", "for", "from", "in", "is",
            "it", "of", "on",  "or",  "so", "the", "to", "was", "were", "with"};
}

namespace {

bool is_null_token(std::string_view raw, const std::set<std::string>& null_tokens) {
    if (text::is_blank(raw)) return true;
    return null_tokens.count(text::lowercase(text::trim(raw))) > 0;
}

Cell typed_cell(const std::string& raw, DeclaredKind kind, const LoadOptions& opts) {
    if (is_null_token(raw, opts.null_tokens)) return Cell::make_missing(raw);
    std::string trimmed = text::trim(raw);
    Cell c;
    c.raw = raw;
    if (kind == DeclaredKind::Numeric) {
        double v;
        if (parse_number(trimmed, v)) {
            c.tag = Cell::Tag::Number;
            c.num = v;
            return c;
        }
    } else if (kind == DeclaredKind::Date) {
        if (auto ts = timeparse::parse(trimmed, opts.date_formats)) {
            c.tag = Cell::Tag::Timestamp;
            c.ts = *ts;
            return c;
        }
    }
    c.tag = Cell::Tag::Text;
    c.text = std::move(trimmed);
    return c;
}

void apply_sidecar(std::vector<Column>& cols, std::vector<RowMeta>& meta, std::size_t rows,
                   const LoadOptions& opts) {
    if (opts.meta_path.empty()) return;
    std::ifstream in(opts.meta_path);
    if (!in) fail(ErrorCode::IoError, "cannot open sidecar " + opts.meta_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadConfig, "sidecar " + opts.meta_path + ": " + e.what());
    }
    if (j.contains("fields")) {
        for (auto& [name, entry] : j["fields"].items()) {
            bool found = false;
            for (auto& c : cols) {
                if (c.name != name) continue;
                found = true;
                if (entry.contains("access_count")) c.access_count = entry["access_count"].get<int64_t>();
                if (entry.contains("accessible")) c.accessible = entry["accessible"].get<bool>();
            }
            if (!found) fail(ErrorCode::SchemaMismatch, "sidecar field '" + name + "' not in table");
        }
    }
    if (j.contains("rows")) {
        const auto& rows_json = j["rows"];
        if (rows_json.size() != rows)
            fail(ErrorCode::SchemaMismatch, "sidecar rows count " + std::to_string(rows_json.size()) +
                                                " != table rows " + std::to_string(rows));
        meta.reserve(rows_json.size());
        for (const auto& r : rows_json) {
            RowMeta m;
            auto created = timeparse::parse_iso(r.at("created_at").get<std::string>());
            auto modified = timeparse::parse_iso(r.at("modified_at").get<std::string>());
            if (!created || !modified)
                fail(ErrorCode::BadTimestamp, "sidecar row timestamp not ISO-8601");
            m.created_at = *created;
            m.modified_at = *modified;
            if (m.created_at > m.modified_at)
                fail(ErrorCode::BadTimestamp, "created_at > modified_at in sidecar");
            if (opts.now && m.modified_at > *opts.now)
                fail(ErrorCode::BadTimestamp, "modified_at after evaluation time");
            meta.push_back(m);
        }
    }
}

}  // namespace

Table table_from_csv_doc(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const LoadOptions& opts) {
    for (const auto& [name, kind] : opts.schema) {
        (void)kind;
        if (std::find(header.begin(), header.end(), name) == header.end())
            fail(ErrorCode::SchemaMismatch, "schema column '" + name + "' not in header");
    }
    std::vector<Column> cols(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        cols[i].name = header[i];
        auto it = opts.schema.find(header[i]);
        cols[i].declared_kind = it != opts.schema.end() ? it->second : DeclaredKind::String;
        cols[i].cells.reserve(rows.size());
    }
    for (const auto& row : rows)
        for (std::size_t i = 0; i < header.size(); ++i)
            cols[i].cells.push_back(typed_cell(row[i], cols[i].declared_kind, opts));
    std::vector<RowMeta> meta;
    apply_sidecar(cols, meta, rows.size(), opts);
    return Table(std::move(cols), std::move(meta), opts.date_formats);
}

Table load_csv(const std::string& path, const LoadOptions& opts) {
    csv::Document doc = csv::read_file(path);
    return table_from_csv_doc(doc.header, doc.rows, opts);
}

Table preprocess(const Table& t, const PreprocessOptions& opts) {
    std::vector<Column> cols = t.columns();
    for (auto& col : cols) {
        bool free_text = opts.free_text_columns.count(col.name) > 0;
        col.free_text = col.free_text || free_text;
        for (auto& cell : col.cells) {
            if (cell.tag != Cell::Tag::Text) continue;
            std::string v = cell.text;
            if (opts.lowercase) v = text::lowercase(v);
            if (opts.strip_symbols) v = text::strip_symbols(v);
            if (opts.remove_stopwords && free_text) {
                std::string kept;
                for (const auto& tok : text::tokens(v)) {
                    if (opts.stopwords.count(text::lowercase(tok))) continue;
                    if (!kept.empty()) kept.push_back(' ');
                    kept += tok;
                }
                v = std::move(kept);
            }
            v = text::trim(v);
            if (opts.normalize_nulls && is_null_token(v, opts.null_tokens)) {
                cell.tag = Cell::Tag::Missing;
                cell.text.clear();
            } else {
                cell.text = std::move(v);
            }
        }
        if (opts.minmax_scale && col.declared_kind == DeclaredKind::Numeric) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& cell : col.cells) {
                if (cell.tag != Cell::Tag::Number) continue;
                lo = std::min(lo, cell.num);
                hi = std::max(hi, cell.num);
            }
            if (std::isfinite(lo)) {
                double range = hi - lo;
                for (auto& cell : col.cells) {
                    if (cell.tag != Cell::Tag::Number) continue;
                    cell.num = range > 0 ? (cell.num - lo) / range : 0.0;
                }
            }
        }
    }
    return Table(std::move(cols), t.row_meta(), t.date_formats());
}

bool parse_number(std::string_view s, double& out) {
    std::size_t i = 0;
    auto digits = [&](std::size_t& count) {
        count = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
            ++count;
        }
    };
    if (s.empty()) return false;
    if (s[i] == '+' || s[i] == '-') ++i;
    std::size_t int_digits = 0, frac_digits = 0;
    digits(int_digits);
    if (i < s.size() && s[i] == '.') {
        ++i;
        digits(frac_digits);
    }
    if (int_digits + frac_digits == 0) return false;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        digits(exp_digits);
        if (exp_digits == 0) return false;
    }
    if (i != s.size()) return false;
    out = std::strtod(std::string(s).c_str(), nullptr);
    return true;
}

ValueKind cell_kind(std::string_view raw, const std::vector<timeparse::Format>& date_formats) {
    std::string trimmed = text::trim(raw);
    if (trimmed.empty()) return ValueKind::Missing;
    if (timeparse::parse(trimmed, date_formats)) return ValueKind::Date;
    double v;
    if (parse_number(trimmed, v)) return ValueKind::Numeric;
    if (is_alpha_space(trimmed)) return ValueKind::String;
    return ValueKind::Alphanumeric;
}

std::size_t diff_count(const Table& a, const Table& b) {
    if (!a.same_schema(b) || a.row_count() != b.row_count())
        fail(ErrorCode::ShapeMismatch, "diff_count requires aligned tables");
    std::size_t diffs = 0;
    for (std::size_t c = 0; c < a.column_count(); ++c) {
        const auto& ca = a.column(c).cells;
        const auto& cb = b.column(c).cells;
        for (std::size_t r = 0; r < ca.size(); ++r)
            if (!cell_equal(ca[r], cb[r])) ++diffs;
    }
    return diffs;
}

Table with_cells(const Table& base, std::vector<std::vector<Cell>> cells_by_column) {
    std::vector<Column> cols = base.columns();
    if (cells_by_column.size() != cols.size())
        fail(ErrorCode::ShapeMismatch, "with_cells column count mismatch");
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cells_by_column[i].size() != base.row_count())
            fail(ErrorCode::ShapeMismatch, "with_cells row count mismatch");
        cols[i].cells = std::move(cells_by_column[i]);
    }
    return Table(std::move(cols), base.row_meta(), base.date_formats());
}

Table drop_rows(const Table& base, const std::vector<std::size_t>& rows) {
    std::vector<bool> drop(base.row_count(), false);
    for (std::size_t r : rows) {
        if (r >= base.row_count()) fail(ErrorCode::ShapeMismatch, "drop_rows index out of range");
        drop[r] = true;
    }
    std::vector<Column> cols = base.columns();
    for (auto& col : cols) {
        std::vector<Cell> kept;
        kept.reserve(col.cells.size());
        for (std::size_t r = 0; r < col.cells.size(); ++r)
            if (!drop[r]) kept.push_back(std::move(col.cells[r]));
        col.cells = std::move(kept);
    }
    std::vector<RowMeta> meta;
    if (base.has_row_meta()) {
        for (std::size_t r = 0; r < base.row_meta().size(); ++r)
            if (!drop[r]) meta.push_back(base.row_meta()[r]);
    }
    return Table(std::move(cols), std::move(meta), base.date_formats());
}

Table append_rows(const Table& base, const std::vector<std::vector<Cell>>& rows,
                  const std::vector<RowMeta>& meta) {
    std::vector<Column> cols = base.columns();
    for (const auto& row : rows) {
        if (row.size() != cols.size()) fail(ErrorCode::ShapeMismatch, "append_rows width mismatch");
        for (std::size_t i = 0; i < cols.size(); ++i) cols[i].cells.push_back(row[i]);
    }
    std::vector<RowMeta> all_meta = base.row_meta();
    if (base.has_row_meta()) {
        if (meta.size() != rows.size())
            fail(ErrorCode::ShapeMismatch, "append_rows needs row_meta for every appended row");
        all_meta.insert(all_meta.end(), meta.begin(), meta.end());
    }
    return Table(std::move(cols), std::move(all_meta), base.date_formats());
}

}  // namespace dq
