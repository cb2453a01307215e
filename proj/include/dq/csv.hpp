#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dq::csv {

/// RFC-4180 reader: quoted fields, doubled quotes, CR/LF and LF line ends.
/// Throws DqError{MalformedCsv} on ragged rows or a dangling quote.
struct Document {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Document read_file(const std::string& path);
Document read_stream(std::istream& in, const std::string& origin);

std::string escape_field(const std::string& field);
void write_file(const std::string& path, const Document& doc);

}  // namespace dq::csv
