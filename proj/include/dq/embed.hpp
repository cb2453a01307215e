#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dq/table.hpp"

namespace dq::embed {

/// Per-column co-occurrence embedding: each token of the target column
/// accumulates hashed context vectors from the tokens that share its rows
/// (the column's own values plus the correlated feature columns). Values
/// whose contexts overlap end up close in cosine space, which is what the
/// conformity correction relies on to map variant renderings onto canonical
/// ones. Numeric context is discretized into quantile-bin tokens.
class ColumnEmbedding {
public:
    ColumnEmbedding(const Table& t, std::size_t target_col,
                    const std::vector<std::size_t>& context_cols, int dim = 32,
                    uint64_t seed = 1);

    /// Embedding of an arbitrary value rendered like the target column's
    /// cells; zero vector when no token is known.
    std::vector<float> value_embedding(const std::string& value) const;

    double similarity(const std::string& a, const std::string& b) const;

    static double cosine(std::span<const float> a, std::span<const float> b);

private:
    std::vector<std::string> value_tokens(const std::string& value, std::size_t col) const;

    int dim_;
    uint64_t seed_;
    std::size_t target_col_;
    std::map<std::string, std::vector<float>> token_vecs_;
    std::map<std::size_t, std::vector<double>> bin_edges_;  // numeric columns
};

}  // namespace dq::embed
