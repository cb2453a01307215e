#include "dq/eif.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dq/error.hpp"
#include "dq/parallel.hpp"
#include "dq/rng.hpp"

namespace dq::eif {

namespace {
constexpr double kEulerMascheroni = 0.5772156649015329;
}

double c_factor(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    double nd = static_cast<double>(n);
    double harmonic = std::log(nd - 1.0) + kEulerMascheroni;
    return 2.0 * harmonic - 2.0 * (nd - 1.0) / nd;
}

IsolationForest IsolationForest::train(const std::vector<std::vector<double>>& rows,
                                       const Params& params) {
    if (rows.empty()) fail(ErrorCode::EmptyData, "isolation forest needs data");
    std::size_t d = rows[0].size();
    std::vector<double> flat;
    flat.reserve(rows.size() * d);
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return train(flat, rows.size(), d, params);
}

IsolationForest IsolationForest::train(const std::vector<double>& data, std::size_t n,
                                       std::size_t d, const Params& params) {
    if (n == 0 || d == 0) fail(ErrorCode::EmptyData, "isolation forest needs data");

    IsolationForest forest;
    forest.params_ = params;
    forest.dims_ = d;
    std::size_t sample = std::min<std::size_t>(std::max(params.sample_size, 2), n);
    forest.effective_sample_ = static_cast<int>(sample);
    forest.norm_factor_ = c_factor(sample);
    int max_depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(sample))));
    int extension =
        params.extension_level < 0
            ? static_cast<int>(d) - 1
            : std::min(params.extension_level, static_cast<int>(d) - 1);

    forest.trees_.resize(params.n_trees);
    std::vector<std::size_t> index_pool(n);
    std::vector<std::size_t> coord_pool(d);

    for (int ti = 0; ti < params.n_trees; ++ti) {
        Rng rng(params.seed + static_cast<uint64_t>(ti));
        Tree& tree = forest.trees_[static_cast<std::size_t>(ti)];

        // without-replacement subsample via partial Fisher-Yates
        for (std::size_t i = 0; i < n; ++i) index_pool[i] = i;
        for (std::size_t i = 0; i < sample; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(index_pool[i], index_pool[j]);
        }

        struct Work {
            std::vector<std::size_t> points;
            int depth;
            int32_t parent;  // node index, -1 for root
            bool is_left;
        };
        std::vector<Work> stack;
        stack.push_back({{index_pool.begin(), index_pool.begin() + static_cast<std::ptrdiff_t>(sample)},
                         0,
                         -1,
                         false});

        auto attach = [&tree](int32_t parent, bool is_left, int32_t child) {
            if (parent < 0) return;
            if (is_left) tree.nodes[static_cast<std::size_t>(parent)].left = child;
            else tree.nodes[static_cast<std::size_t>(parent)].right = child;
        };

        while (!stack.empty()) {
            Work work = std::move(stack.back());
            stack.pop_back();
            int32_t node_idx = static_cast<int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            attach(work.parent, work.is_left, node_idx);

            // bounding box of the node's points
            std::vector<double> lo(d, std::numeric_limits<double>::infinity());
            std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
            for (std::size_t p : work.points) {
                for (std::size_t c = 0; c < d; ++c) {
                    double v = data[p * d + c];
                    lo[c] = std::min(lo[c], v);
                    hi[c] = std::max(hi[c], v);
                }
            }
            bool degenerate = true;
            for (std::size_t c = 0; c < d; ++c)
                if (hi[c] > lo[c]) degenerate = false;

            if (work.depth >= max_depth || work.points.size() <= 1 || degenerate) {
                tree.nodes[static_cast<std::size_t>(node_idx)].size =
                    static_cast<uint32_t>(work.points.size());
                continue;
            }

            bool split_done = false;
            for (int attempt = 0; attempt < 4 && !split_done; ++attempt) {
                // random slope with (d - 1 - extension) coordinates zeroed
                std::vector<double> normal(d);
                for (std::size_t c = 0; c < d; ++c) normal[c] = rng.normal();
                std::size_t zeroed = d - 1 - static_cast<std::size_t>(extension);
                for (std::size_t i = 0; i < d; ++i) coord_pool[i] = i;
                for (std::size_t i = 0; i < zeroed; ++i) {
                    std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
                    std::swap(coord_pool[i], coord_pool[j]);
                    normal[coord_pool[i]] = 0.0;
                }
                // intercept inside the bounding box
                std::vector<double> intercept(d);
                for (std::size_t c = 0; c < d; ++c)
                    intercept[c] = hi[c] > lo[c] ? rng.uniform(lo[c], hi[c]) : lo[c];

                std::vector<std::size_t> left_pts, right_pts;
                for (std::size_t p : work.points) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c)
                        dot += (data[p * d + c] - intercept[c]) * normal[c];
                    (dot <= 0.0 ? left_pts : right_pts).push_back(p);
                }
                if (left_pts.empty() || right_pts.empty()) continue;

                Node& node = tree.nodes[static_cast<std::size_t>(node_idx)];
                node.vector_offset = static_cast<uint32_t>(forest.normals_.size());
                forest.normals_.insert(forest.normals_.end(), normal.begin(), normal.end());
                forest.intercepts_.insert(forest.intercepts_.end(), intercept.begin(),
                                          intercept.end());
                node.left = -2;  // patched by attach() when children pop
                node.right = -2;
                stack.push_back({std::move(right_pts), work.depth + 1, node_idx, false});
                stack.push_back({std::move(left_pts), work.depth + 1, node_idx, true});
                split_done = true;
            }
            if (!split_done) {
                tree.nodes[static_cast<std::size_t>(node_idx)].size =
                    static_cast<uint32_t>(work.points.size());
            }
        }
    }
    return forest;
}

double IsolationForest::tree_path_length(const Tree& tree, std::span<const double> x) const {
    int32_t idx = 0;
    int depth = 0;
    while (true) {
        const Node& node = tree.nodes[static_cast<std::size_t>(idx)];
        if (node.left < 0) {  // leaf
            return static_cast<double>(depth) + (node.size > 1 ? c_factor(node.size) : 0.0);
        }
        const double* normal = normals_.data() + node.vector_offset;
        const double* intercept = intercepts_.data() + node.vector_offset;
        double dot = 0.0;
        for (std::size_t c = 0; c < dims_; ++c) dot += (x[c] - intercept[c]) * normal[c];
        idx = dot <= 0.0 ? node.left : node.right;
        ++depth;
    }
}

double IsolationForest::avg_path_length(std::span<const double> x) const {
    if (x.size() != dims_)
        fail(ErrorCode::DimensionMismatch,
             "point has " + std::to_string(x.size()) + " dims, forest expects " +
                 std::to_string(dims_));
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree_path_length(tree, x);
    return sum / static_cast<double>(trees_.size());
}

double IsolationForest::score(std::span<const double> x) const {
    double e_h = avg_path_length(x);
    return std::pow(2.0, -e_h / norm_factor_);
}

std::vector<double> IsolationForest::score_all(const std::vector<double>& data,
                                               std::size_t n) const {
    std::vector<double> scores(n);
    parallel_for(n, [&](std::size_t i) {
        scores[i] = score(std::span<const double>(data.data() + i * dims_, dims_));
    });
    return scores;
}

}  // namespace dq::eif
