#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dq::gbt {

struct Params {
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 6;
    double dropout_rate = 0.1;  // per-round chance of muting each earlier tree
    uint64_t seed = 1234;
    int max_bins = 64;  // histogram granularity for splits
    int max_classes = 50;  // one-vs-rest cap for high-cardinality targets
};

/// Additive regression-tree ensemble fit to squared-error residuals.
/// Leaf values are residual means, so with dropout disabled and
/// learning_rate in (0, 2) the training MSE is non-increasing per round.
class Booster {
public:
    /// x is row-major n x d (d may be 0; the model then predicts the base).
    /// When `mse_per_round` is given it receives the training MSE after each
    /// round.
    static Booster train(const std::vector<float>& x, std::size_t n, std::size_t d,
                         const std::vector<double>& y, const Params& params,
                         std::vector<double>* mse_per_round = nullptr);

    double predict(std::span<const float> row) const;
    double base() const { return base_; }
    std::size_t dims() const { return dims_; }

private:
    struct Node {
        int32_t feature = -1;  // -1 marks a leaf
        float threshold = 0.0f;
        int32_t left = -1;
        int32_t right = -1;
        double value = 0.0;
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(std::span<const float> row) const;
    };

    std::vector<Tree> trees_;
    double base_ = 0.0;
    double learning_rate_ = 0.1;
    std::size_t dims_ = 0;
};

struct Prediction {
    std::string value;        // class label or bin label "[lo,hi)"
    double confidence = 0.0;  // softmax over class scores
    bool binned = false;
    double bin_lo = 0.0;
    double bin_hi = 0.0;
    double representative = 0.0;  // training-mean of the predicted bin
};

/// One-vs-rest boosted classifier. Categorical targets are class labels;
/// continuous targets are first quantile-binned and then treated as classes.
class GbtModel {
public:
    static GbtModel train_categorical(const std::vector<float>& x, std::size_t n, std::size_t d,
                                      const std::vector<std::string>& labels,
                                      const Params& params);

    static GbtModel train_binned(const std::vector<float>& x, std::size_t n, std::size_t d,
                                 const std::vector<double>& targets, int bins,
                                 const Params& params);

    Prediction predict(std::span<const float> row) const;

    bool is_binned() const { return binned_; }
    bool is_constant() const { return constant_; }
    const std::vector<std::string>& classes() const { return classes_; }

private:
    std::vector<Booster> boosters_;    // one per class
    std::vector<std::string> classes_;  // sorted; argmax ties pick the smallest
    bool binned_ = false;
    bool constant_ = false;
    std::string constant_value_;
    std::vector<double> bin_lo_, bin_hi_, bin_mean_;
    double constant_rep_ = 0.0;
};

std::string format_bin_label(double lo, double hi);

}  // namespace dq::gbt
