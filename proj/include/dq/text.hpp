#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dq::text {

std::string trim(std::string_view s);
std::string lowercase(std::string_view s);

/// Whitespace tokenizer; empty tokens dropped.
std::vector<std::string> tokens(std::string_view s);

/// Strips punctuation. Characters in "-/:." survive inside tokens that carry
/// digits, so dates and decimals keep parsing after the pass.
std::string strip_symbols(std::string_view s);

bool is_blank(std::string_view s);

/// Sparse character-3-gram count vector, sorted by gram id. Strings shorter
/// than 3 chars fall back to a single gram of the padded string.
struct GramVector {
    std::vector<std::pair<uint32_t, float>> grams;  // (id, count), id ascending
    double norm = 0.0;
};

GramVector gram_vector(std::string_view s);

/// Cosine similarity of two 3-gram count vectors; 0 when either is empty.
double cosine(const GramVector& a, const GramVector& b);

/// Convenience overload building both vectors on the fly.
double trigram_cosine(std::string_view a, std::string_view b);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - dist/max_len; 1.0 for two empty strings.
double edit_similarity(std::string_view a, std::string_view b);

}  // namespace dq::text
