#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dq::eif {

struct Params {
    int n_trees = 100;
    int sample_size = 265;     // clamped to n when the data is smaller
    int extension_level = -1;  // -1 = dimensionality - 1 (fully extended)
    uint64_t seed = 1;
};

/// Average unsuccessful-search path length of a BST with n points:
/// c(n) = 2 H(n-1) - 2 (n-1)/n. Normalizes path lengths to scores.
double c_factor(std::size_t n);

/// Isolation forest with random-hyperplane splits. Each internal node holds a
/// random normal vector and an intercept sampled inside the node's bounding
/// box; points branch on the sign of (x - p) . n. Anomalies end in shallow
/// leaves, so shorter average paths mean higher scores.
class IsolationForest {
public:
    /// data is row-major, n x d. Trees are built on without-replacement
    /// subsamples of min(sample_size, n) points, each tree seeded with
    /// seed + tree index.
    static IsolationForest train(const std::vector<double>& data, std::size_t n, std::size_t d,
                                 const Params& params);
    static IsolationForest train(const std::vector<std::vector<double>>& rows,
                                 const Params& params);

    /// s(x) = 2^(-E[h(x)] / c(sample_size)), in (0, 1].
    double score(std::span<const double> x) const;

    double avg_path_length(std::span<const double> x) const;

    /// Scores for every row of a matrix, parallel over points.
    std::vector<double> score_all(const std::vector<double>& data, std::size_t n) const;

    std::size_t dims() const { return dims_; }
    int effective_sample_size() const { return effective_sample_; }
    const Params& params() const { return params_; }

private:
    struct Node {
        int32_t left = -1;   // -1 marks a leaf
        int32_t right = -1;
        uint32_t size = 0;            // leaf population
        uint32_t vector_offset = 0;   // into normals_/intercepts_
    };
    struct Tree {
        std::vector<Node> nodes;
    };

    double tree_path_length(const Tree& tree, std::span<const double> x) const;

    std::vector<Tree> trees_;
    std::vector<double> normals_;     // packed d-vectors per internal node
    std::vector<double> intercepts_;  // packed d-vectors per internal node
    std::size_t dims_ = 0;
    int effective_sample_ = 0;
    double norm_factor_ = 1.0;  // c(effective_sample_)
    Params params_;
};

}  // namespace dq::eif
