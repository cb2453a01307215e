#include "dq/embed.hpp"

#include <algorithm>
#include <cmath>

#include "dq/text.hpp"

namespace dq::embed {

namespace {

uint64_t hash64(uint64_t seed, std::string_view s) {
    uint64_t h = 14695981039346656037ull ^ seed;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// Sparse signed projection of a context token: 4 signed taps into the
// embedding space, deterministic in (seed, token).
void add_context(std::vector<float>& vec, uint64_t seed, const std::string& token, int dim) {
    uint64_t h = hash64(seed, token);
    for (int tap = 0; tap < 4; ++tap) {
        int slot = static_cast<int>((h >> (tap * 16)) % static_cast<uint64_t>(dim));
        float sign = ((h >> (tap * 16 + 8)) & 1) ? 1.0f : -1.0f;
        vec[static_cast<std::size_t>(slot)] += sign;
    }
}

std::vector<double> quantile_edges(std::vector<double> values, int bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    if (values.empty()) return edges;
    for (int b = 1; b < bins; ++b) {
        double e = values[values.size() * static_cast<std::size_t>(b) /
                          static_cast<std::size_t>(bins)];
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    return edges;
}

std::size_t bin_of(const std::vector<double>& edges, double v) {
    return static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

}  // namespace

ColumnEmbedding::ColumnEmbedding(const Table& t, std::size_t target_col,
                                 const std::vector<std::size_t>& context_cols, int dim,
                                 uint64_t seed)
    : dim_(dim), seed_(seed), target_col_(target_col) {
    // quantile bins for every numeric column involved
    std::vector<std::size_t> all_cols = context_cols;
    all_cols.push_back(target_col);
    for (std::size_t c : all_cols) {
        const Column& col = t.column(c);
        if (col.declared_kind == DeclaredKind::String) continue;
        std::vector<double> vals;
        for (const auto& cell : col.cells) {
            if (cell.tag == Cell::Tag::Number) vals.push_back(cell.num);
            else if (cell.tag == Cell::Tag::Timestamp)
                vals.push_back(static_cast<double>(cell.ts) / 86400.0);
        }
        if (!vals.empty()) bin_edges_[c] = quantile_edges(std::move(vals), 10);
    }

    for (std::size_t r = 0; r < t.row_count(); ++r) {
        const Cell& target = t.column(target_col).cells[r];
        if (target.missing()) continue;
        auto target_toks = value_tokens(target.content(), target_col);
        if (target_toks.empty()) continue;
        std::vector<std::string> context;
        for (std::size_t c : context_cols) {
            const Cell& cell = t.column(c).cells[r];
            if (cell.missing()) continue;
            for (auto& tok : value_tokens(cell.content(), c))
                context.push_back(t.column(c).name + ":" + tok);
        }
        for (const auto& tok : target_toks) {
            auto& vec = token_vecs_[tok];
            if (vec.empty()) vec.assign(static_cast<std::size_t>(dim_), 0.0f);
            for (const auto& c : context) add_context(vec, seed_, c, dim_);
        }
    }
}

std::vector<std::string> ColumnEmbedding::value_tokens(const std::string& value,
                                                       std::size_t col) const {
    std::vector<std::string> out;
    auto edge_it = bin_edges_.find(col);
    double num;
    if (edge_it != bin_edges_.end() && parse_number(text::trim(value), num)) {
        out.push_back("bin" + std::to_string(bin_of(edge_it->second, num)));
        return out;
    }
    for (const auto& tok : text::tokens(text::lowercase(value))) out.push_back(tok);
    return out;
}

std::vector<float> ColumnEmbedding::value_embedding(const std::string& value) const {
    std::vector<float> out(static_cast<std::size_t>(dim_), 0.0f);
    for (const auto& tok : value_tokens(value, target_col_)) {
        auto it = token_vecs_.find(tok);
        if (it == token_vecs_.end()) continue;
        for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] += it->second[static_cast<std::size_t>(i)];
    }
    return out;
}

double ColumnEmbedding::similarity(const std::string& a, const std::string& b) const {
    auto va = value_embedding(a);
    auto vb = value_embedding(b);
    return cosine(va, vb);
}

double ColumnEmbedding::cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace dq::embed
