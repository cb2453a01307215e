#include "dq/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "dq/error.hpp"
#include "dq/rng.hpp"

namespace dq::gbt {

namespace {

// Per-feature quantile binning for histogram splits. Bin code 0 is reserved
// for NaN (missing feature values).
struct BinnedMatrix {
    std::size_t n = 0, d = 0;
    int bins = 0;
    std::vector<uint16_t> codes;                 // n x d
    std::vector<std::vector<float>> boundaries;  // per feature, ascending cut points

    uint16_t code_of(std::size_t feature, float v) const {
        if (std::isnan(v)) return 0;
        const auto& cuts = boundaries[feature];
        auto it = std::upper_bound(cuts.begin(), cuts.end(), v);
        return static_cast<uint16_t>(1 + (it - cuts.begin()));
    }
};

BinnedMatrix bin_features(const std::vector<float>& x, std::size_t n, std::size_t d,
                          int max_bins) {
    BinnedMatrix bm;
    bm.n = n;
    bm.d = d;
    bm.boundaries.resize(d);
    std::vector<float> column;
    for (std::size_t f = 0; f < d; ++f) {
        column.clear();
        for (std::size_t i = 0; i < n; ++i) {
            float v = x[i * d + f];
            if (!std::isnan(v)) column.push_back(v);
        }
        std::sort(column.begin(), column.end());
        column.erase(std::unique(column.begin(), column.end()), column.end());
        auto& cuts = bm.boundaries[f];
        if (static_cast<int>(column.size()) <= max_bins) {
            // each distinct value gets a bin; cuts at midpoints
            for (std::size_t i = 0; i + 1 < column.size(); ++i)
                cuts.push_back(0.5f * (column[i] + column[i + 1]));
        } else {
            for (int b = 1; b < max_bins; ++b) {
                std::size_t idx = column.size() * static_cast<std::size_t>(b) /
                                  static_cast<std::size_t>(max_bins);
                cuts.push_back(column[idx]);
            }
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        }
    }
    bm.bins = 2;
    for (const auto& cuts : bm.boundaries)
        bm.bins = std::max(bm.bins, static_cast<int>(cuts.size()) + 2);
    bm.codes.resize(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < d; ++f)
            bm.codes[i * d + f] = bm.code_of(f, x[i * d + f]);
    return bm;
}

}  // namespace

double Booster::Tree::predict(std::span<const float> row) const {
    int32_t idx = 0;
    while (true) {
        const Node& node = nodes[static_cast<std::size_t>(idx)];
        if (node.feature < 0) return node.value;
        float v = row[static_cast<std::size_t>(node.feature)];
        // NaN routes left with the missing-value bin; strict < mirrors the
        // training-time partition "bin code <= cut" exactly
        idx = (std::isnan(v) || v < node.threshold) ? node.left : node.right;
    }
}

Booster Booster::train(const std::vector<float>& x, std::size_t n, std::size_t d,
                       const std::vector<double>& y, const Params& params,
                       std::vector<double>* mse_per_round) {
    if (n == 0 || y.size() != n) fail(ErrorCode::EmptyTraining, "booster needs training rows");
    Booster booster;
    booster.dims_ = d;
    booster.learning_rate_ = params.learning_rate;
    booster.base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (d == 0 || params.rounds == 0) {
        if (mse_per_round) {
            double mse = 0.0;
            for (double v : y) mse += (v - booster.base_) * (v - booster.base_);
            mse_per_round->assign(std::max(params.rounds, 1), mse / static_cast<double>(n));
        }
        return booster;
    }

    BinnedMatrix bm = bin_features(x, n, d, params.max_bins);
    std::vector<double> pred(n, booster.base_);
    std::vector<double> residual(n);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    Rng rng(params.seed);

    struct HistCell {
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::vector<HistCell> hist(static_cast<std::size_t>(bm.bins));

    for (int round = 0; round < params.rounds; ++round) {
        // dropout: residuals against the ensemble minus a sampled drop set
        std::vector<std::size_t> dropped;
        if (params.dropout_rate > 0.0) {
            for (std::size_t ti = 0; ti < booster.trees_.size(); ++ti)
                if (rng.uniform() < params.dropout_rate) dropped.push_back(ti);
        }
        if (dropped.empty()) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                std::span<const float> row(x.data() + i * d, d);
                double adj = pred[i];
                for (std::size_t ti : dropped)
                    adj -= booster.learning_rate_ * booster.trees_[ti].predict(row);
                residual[i] = y[i] - adj;
            }
        }

        // grow one tree, depth-first, histogram splits by variance reduction
        Tree tree;
        struct Work {
            std::vector<std::size_t> rows;
            int depth;
            int32_t parent;
            bool is_left;
        };
        std::vector<Work> stack;
        stack.push_back({all_rows, 0, -1, false});
        while (!stack.empty()) {
            Work work = std::move(stack.back());
            stack.pop_back();
            int32_t node_idx = static_cast<int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            if (work.parent >= 0) {
                auto& parent = tree.nodes[static_cast<std::size_t>(work.parent)];
                (work.is_left ? parent.left : parent.right) = node_idx;
            }
            double sum = 0.0;
            for (std::size_t r : work.rows) sum += residual[r];
            double mean = sum / static_cast<double>(work.rows.size());

            if (work.depth >= params.max_depth || work.rows.size() < 2) {
                tree.nodes[static_cast<std::size_t>(node_idx)].value = mean;
                continue;
            }

            // pick (feature, bin cut) maximizing sum_l^2/n_l + sum_r^2/n_r
            double best_gain = sum * sum / static_cast<double>(work.rows.size());
            int best_feature = -1;
            int best_cut = -1;
            double eps = 1e-12;
            for (std::size_t f = 0; f < d; ++f) {
                std::fill(hist.begin(), hist.end(), HistCell{});
                for (std::size_t r : work.rows) {
                    auto code = bm.codes[r * d + f];
                    hist[code].sum += residual[r];
                    ++hist[code].count;
                }
                double left_sum = 0.0;
                std::size_t left_count = 0;
                for (int cut = 0; cut + 1 < bm.bins; ++cut) {
                    left_sum += hist[static_cast<std::size_t>(cut)].sum;
                    left_count += hist[static_cast<std::size_t>(cut)].count;
                    if (left_count == 0 || left_count == work.rows.size()) continue;
                    double right_sum = sum - left_sum;
                    std::size_t right_count = work.rows.size() - left_count;
                    double gain = left_sum * left_sum / static_cast<double>(left_count) +
                                  right_sum * right_sum / static_cast<double>(right_count);
                    if (gain > best_gain + eps) {
                        best_gain = gain;
                        best_feature = static_cast<int>(f);
                        best_cut = cut;
                    }
                }
            }
            if (best_feature < 0) {
                tree.nodes[static_cast<std::size_t>(node_idx)].value = mean;
                continue;
            }
            // threshold: value below which codes <= best_cut fall
            const auto& cuts = bm.boundaries[static_cast<std::size_t>(best_feature)];
            float threshold = best_cut == 0 ? -std::numeric_limits<float>::infinity()
                                            : cuts[static_cast<std::size_t>(best_cut - 1)];
            std::vector<std::size_t> left_rows, right_rows;
            for (std::size_t r : work.rows) {
                auto code = bm.codes[r * d + static_cast<std::size_t>(best_feature)];
                (code <= static_cast<uint16_t>(best_cut) ? left_rows : right_rows).push_back(r);
            }
            Node& node = tree.nodes[static_cast<std::size_t>(node_idx)];
            node.feature = best_feature;
            node.threshold = threshold;
            stack.push_back({std::move(right_rows), work.depth + 1, node_idx, false});
            stack.push_back({std::move(left_rows), work.depth + 1, node_idx, true});
        }

        for (std::size_t i = 0; i < n; ++i)
            pred[i] += booster.learning_rate_ *
                       tree.predict(std::span<const float>(x.data() + i * d, d));
        booster.trees_.push_back(std::move(tree));

        if (mse_per_round) {
            double mse = 0.0;
            for (std::size_t i = 0; i < n; ++i) mse += (y[i] - pred[i]) * (y[i] - pred[i]);
            mse_per_round->push_back(mse / static_cast<double>(n));
        }
    }
    return booster;
}

double Booster::predict(std::span<const float> row) const {
    double out = base_;
    for (const auto& tree : trees_) out += learning_rate_ * tree.predict(row);
    return out;
}

std::string format_bin_label(double lo, double hi) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "[%g,%g)", lo, hi);
    return buf;
}

GbtModel GbtModel::train_categorical(const std::vector<float>& x, std::size_t n, std::size_t d,
                                     const std::vector<std::string>& labels,
                                     const Params& params) {
    if (n == 0 || labels.size() != n)
        fail(ErrorCode::EmptyTraining, "categorical training needs labeled rows");
    std::map<std::string, std::size_t> freq;
    for (const auto& l : labels) ++freq[l];

    GbtModel model;
    if (freq.size() == 1) {
        model.constant_ = true;
        model.constant_value_ = freq.begin()->first;
        model.classes_ = {model.constant_value_};
        return model;
    }
    // cap high-cardinality targets at the most frequent classes
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (static_cast<int>(ranked.size()) > params.max_classes)
        ranked.resize(static_cast<std::size_t>(params.max_classes));
    for (const auto& [cls, count] : ranked) model.classes_.push_back(cls);
    std::sort(model.classes_.begin(), model.classes_.end());

    std::map<std::string, std::size_t> class_idx;
    for (std::size_t c = 0; c < model.classes_.size(); ++c) class_idx[model.classes_[c]] = c;

    // keep only rows whose label survived the cap
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i)
        if (class_idx.count(labels[i])) kept.push_back(i);
    std::vector<float> xk(kept.size() * d);
    for (std::size_t i = 0; i < kept.size(); ++i)
        std::copy_n(x.data() + kept[i] * d, d, xk.data() + i * d);

    for (std::size_t c = 0; c < model.classes_.size(); ++c) {
        std::vector<double> y(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i)
            y[i] = labels[kept[i]] == model.classes_[c] ? 1.0 : 0.0;
        Params p = params;
        p.seed = params.seed + c;
        model.boosters_.push_back(Booster::train(xk, kept.size(), d, y, p));
    }
    return model;
}

GbtModel GbtModel::train_binned(const std::vector<float>& x, std::size_t n, std::size_t d,
                                const std::vector<double>& targets, int bins,
                                const Params& params) {
    if (n == 0 || targets.size() != n)
        fail(ErrorCode::EmptyTraining, "binned training needs target rows");
    std::vector<double> sorted = targets;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    GbtModel model;
    model.binned_ = true;
    if (sorted.size() == 1) {
        model.constant_ = true;
        model.constant_rep_ = sorted[0];
        model.constant_value_ = format_bin_label(sorted[0], sorted[0]);
        model.bin_lo_ = {sorted[0]};
        model.bin_hi_ = {sorted[0]};
        model.bin_mean_ = {sorted[0]};
        return model;
    }

    bins = std::max(2, std::min<int>(bins, static_cast<int>(sorted.size())));
    // quantile edges over the observed targets
    std::vector<double> all = targets;
    std::sort(all.begin(), all.end());
    std::vector<double> edges;
    edges.push_back(all.front());
    for (int b = 1; b < bins; ++b) {
        double e = all[all.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins)];
        if (e > edges.back()) edges.push_back(e);
    }
    edges.push_back(all.back());
    std::size_t n_bins = edges.size() - 1;

    auto bin_of = [&edges, n_bins](double v) {
        auto it = std::upper_bound(edges.begin(), edges.end() - 1, v);
        std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
        return std::min(b, n_bins - 1);
    };

    model.bin_lo_.resize(n_bins);
    model.bin_hi_.resize(n_bins);
    model.bin_mean_.assign(n_bins, 0.0);
    std::vector<std::size_t> bin_count(n_bins, 0);
    std::vector<std::string> labels(n);
    for (std::size_t b = 0; b < n_bins; ++b) {
        model.bin_lo_[b] = edges[b];
        model.bin_hi_[b] = edges[b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = bin_of(targets[i]);
        model.bin_mean_[b] += targets[i];
        ++bin_count[b];
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%03zu", b);
        labels[i] = buf;
    }
    for (std::size_t b = 0; b < n_bins; ++b)
        model.bin_mean_[b] = bin_count[b] ? model.bin_mean_[b] / static_cast<double>(bin_count[b])
                                          : 0.5 * (model.bin_lo_[b] + model.bin_hi_[b]);

    GbtModel classifier = train_categorical(x, n, d, labels, params);
    model.boosters_ = std::move(classifier.boosters_);
    model.classes_ = std::move(classifier.classes_);
    model.constant_ = classifier.constant_;
    if (model.constant_) {
        std::size_t b = static_cast<std::size_t>(std::stoul(classifier.constant_value_));
        model.constant_rep_ = model.bin_mean_[b];
        model.constant_value_ = format_bin_label(model.bin_lo_[b], model.bin_hi_[b]);
    }
    return model;
}

Prediction GbtModel::predict(std::span<const float> row) const {
    Prediction out;
    out.binned = binned_;
    if (constant_) {
        out.value = constant_value_;
        out.confidence = 1.0;
        if (binned_) {
            out.representative = constant_rep_;
            out.bin_lo = bin_lo_[0];
            out.bin_hi = bin_hi_[0];
        }
        return out;
    }
    std::vector<double> scores(boosters_.size());
    for (std::size_t c = 0; c < boosters_.size(); ++c) scores[c] = boosters_[c].predict(row);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;  // classes sorted: tie keeps smallest

    double max_score = scores[best];
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - max_score);
    out.confidence = 1.0 / denom;

    if (binned_) {
        std::size_t b = static_cast<std::size_t>(std::stoul(classes_[best]));
        out.bin_lo = bin_lo_[b];
        out.bin_hi = bin_hi_[b];
        out.representative = bin_mean_[b];
        out.value = format_bin_label(out.bin_lo, out.bin_hi);
    } else {
        out.value = classes_[best];
    }
    return out;
}

}  // namespace dq::gbt
