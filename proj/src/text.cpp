#include "dq/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dq::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

std::string strip_symbols(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        // one token
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        std::string_view tok = s.substr(start, i - start);
        bool has_digit = std::any_of(tok.begin(), tok.end(), is_digit);
        for (char c : tok) {
            if (!is_punct(c)) {
                out.push_back(c);
            } else if (has_digit && (c == '-' || c == '/' || c == ':' || c == '.')) {
                out.push_back(c);
            }
        }
    }
    // collapse whitespace runs introduced by erased tokens
    std::string collapsed;
    collapsed.reserve(out.size());
    bool prev_space = true;
    for (char c : out) {
        if (is_space(c)) {
            if (!prev_space) collapsed.push_back(' ');
            prev_space = true;
        } else {
            collapsed.push_back(c);
            prev_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), is_space);
}

namespace {

uint32_t gram_id(std::string_view g) {
    // FNV-1a over up to 3 bytes; collisions are harmless for similarity use.
    uint32_t h = 2166136261u;
    for (char c : g) {
        h ^= static_cast<unsigned char>(c);
        h *= 16777619u;
    }
    return h;
}

}  // namespace

GramVector gram_vector(std::string_view s) {
    GramVector v;
    std::string padded(s);
    if (padded.size() < 3 && !padded.empty()) padded.resize(3, '\x01');
    if (padded.empty()) return v;
    std::vector<uint32_t> ids;
    ids.reserve(padded.size());
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) ids.push_back(gram_id(padded.substr(i, 3)));
    std::sort(ids.begin(), ids.end());
    double sq = 0.0;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) ++j;
        float count = static_cast<float>(j - i);
        v.grams.emplace_back(ids[i], count);
        sq += static_cast<double>(count) * count;
        i = j;
    }
    v.norm = std::sqrt(sq);
    return v;
}

double cosine(const GramVector& a, const GramVector& b) {
    if (a.grams.empty() || b.grams.empty()) return 0.0;
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.grams.size() && j < b.grams.size()) {
        if (a.grams[i].first == b.grams[j].first) {
            dot += static_cast<double>(a.grams[i].second) * b.grams[j].second;
            ++i;
            ++j;
        } else if (a.grams[i].first < b.grams[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    if (dot <= 0.0) return 0.0;
    return dot / (a.norm * b.norm);
}

double trigram_cosine(std::string_view a, std::string_view b) {
    return cosine(gram_vector(a), gram_vector(b));
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> row(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        std::size_t diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            std::size_t next_diag = row[i];
            std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
            row[i] = std::min({row[i] + 1, row[i - 1] + 1, diag + cost});
            diag = next_diag;
        }
    }
    return row[a.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

}  // namespace dq::text
