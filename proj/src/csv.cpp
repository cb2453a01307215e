#include "dq/csv.hpp"

#include <fstream>
#include <sstream>

#include "dq/error.hpp"

namespace dq::csv {

namespace {

// Parses one record starting at `pos`; advances past its line terminator.
// Returns false at end of input with no record started.
bool next_record(const std::string& data, std::size_t& pos, std::vector<std::string>& out,
                 const std::string& origin) {
    out.clear();
    if (pos >= data.size()) return false;
    std::string field;
    bool in_quotes = false;
    bool started = false;
    while (pos < data.size()) {
        char c = data[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < data.size() && data[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                field.push_back(c);
                ++pos;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            started = true;
            ++pos;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            started = true;
            ++pos;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && pos + 1 < data.size() && data[pos + 1] == '\n') ++pos;
            ++pos;
            out.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
            started = true;
            ++pos;
        }
    }
    if (in_quotes) fail(ErrorCode::MalformedCsv, origin + ": unterminated quoted field");
    if (!started && field.empty() && out.empty()) return false;
    out.push_back(std::move(field));
    return true;
}

Document parse(const std::string& data, const std::string& origin) {
    Document doc;
    std::size_t pos = 0;
    std::vector<std::string> record;
    if (!next_record(data, pos, record, origin))
        fail(ErrorCode::MalformedCsv, origin + ": missing header row");
    doc.header = record;
    std::size_t width = doc.header.size();
    while (next_record(data, pos, record, origin)) {
        if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
        if (record.size() != width)
            fail(ErrorCode::MalformedCsv,
                 origin + ": row " + std::to_string(doc.rows.size() + 1) + " has " +
                     std::to_string(record.size()) + " fields, expected " + std::to_string(width));
        doc.rows.push_back(record);
    }
    return doc;
}

}  // namespace

Document read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

Document read_stream(std::istream& in, const std::string& origin) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), origin);
}

std::string escape_field(const std::string& field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_file(const std::string& path, const Document& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << escape_field(fields[i]);
        }
        out << '\n';
    };
    emit(doc.header);
    for (const auto& row : doc.rows) emit(row);
}

}  // namespace dq::csv
