#include "dq/er.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "dq/error.hpp"

namespace dq::er {

namespace {

std::string normalize_for_key(const std::string& content) {
    return text::trim(text::strip_symbols(text::lowercase(content)));
}

uint64_t hash_key(uint64_t salt, std::string_view key) {
    uint64_t h = 14695981039346656037ull ^ salt;
    for (char c : key) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

double f_score_of(std::size_t tp, std::size_t fp, std::size_t fn) {
    double precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    double recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

using FeatureRow = std::pair<std::vector<float>, uint8_t>;

// Deterministic full-batch logistic regression.
void fit_logistic(const std::vector<FeatureRow>& data, std::vector<double>& weights, double& bias,
                  int epochs) {
    if (data.empty()) return;
    std::size_t dim = data[0].first.size();
    if (weights.size() != dim) weights.assign(dim, 0.0);
    const double lr = 2.0;
    const double l2 = 1e-4;
    std::vector<double> grad(dim);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (const auto& [x, y] : data) {
            double z = bias;
            for (std::size_t i = 0; i < dim; ++i) z += weights[i] * x[i];
            double err = sigmoid(z) - static_cast<double>(y);
            for (std::size_t i = 0; i < dim; ++i) grad[i] += err * x[i];
            grad_bias += err;
        }
        double inv_n = 1.0 / static_cast<double>(data.size());
        for (std::size_t i = 0; i < dim; ++i)
            weights[i] -= lr * (grad[i] * inv_n + l2 * weights[i]);
        bias -= lr * grad_bias * inv_n;
    }
}

double probability_raw(const std::vector<double>& weights, double bias,
                       const std::vector<float>& x) {
    double z = bias;
    for (std::size_t i = 0; i < weights.size() && i < x.size(); ++i) z += weights[i] * x[i];
    return sigmoid(z);
}

// Threshold maximizing F on the given set. Among F-ties the lowest candidate
// wins and the cut is placed midway to the next candidate below it, leaving
// margin on both sides of the decision boundary.
double tune_threshold(const std::vector<double>& probs, const std::vector<uint8_t>& labels) {
    std::vector<double> candidates = probs;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_f = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        double t = candidates[ci];
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            bool predicted = probs[i] >= t;
            if (predicted && labels[i]) ++tp;
            else if (predicted) ++fp;
            else if (labels[i]) ++fn;
        }
        double f = f_score_of(tp, fp, fn);
        if (f > best_f) {
            best_f = f;
            best_idx = ci;
        }
    }
    if (candidates.empty()) return 0.5;
    double t = candidates[best_idx];
    return best_idx > 0 ? 0.5 * (candidates[best_idx - 1] + t) : 0.5 * t;
}

double evaluate_f(const MatchModel& m, const std::vector<FeatureRow>& data) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [x, y] : data) {
        bool predicted = m.probability(x) >= m.match_threshold;
        if (predicted && y) ++tp;
        else if (predicted) ++fp;
        else if (y) ++fn;
    }
    return f_score_of(tp, fp, fn);
}

}  // namespace

nlohmann::json ErConfig::to_json() const {
    nlohmann::json j;
    j["key_fields"] = key_fields;
    j["window"] = window;
    j["compare_fields"] = compare_fields;
    j["field_weights"] = field_weights;
    j["auto_label_lo"] = auto_label_lo;
    j["auto_label_hi"] = auto_label_hi;
    j["target_recall"] = target_recall;
    j["max_block_rows"] = max_block_rows;
    j["date_horizon_days"] = date_horizon_days;
    j["seed"] = seed;
    j["guard_band"] = guard_band;
    j["classifier_epochs"] = classifier_epochs;
    return j;
}

ErConfig ErConfig::from_json(const nlohmann::json& j) {
    ErConfig c;
    if (j.contains("key_fields")) c.key_fields = j["key_fields"].get<std::vector<std::string>>();
    if (j.contains("window")) c.window = j["window"].get<int>();
    if (j.contains("compare_fields"))
        c.compare_fields = j["compare_fields"].get<std::vector<std::string>>();
    if (j.contains("field_weights"))
        c.field_weights = j["field_weights"].get<std::map<std::string, double>>();
    if (j.contains("auto_label_lo")) c.auto_label_lo = j["auto_label_lo"].get<double>();
    if (j.contains("auto_label_hi")) c.auto_label_hi = j["auto_label_hi"].get<double>();
    if (j.contains("target_recall")) c.target_recall = j["target_recall"].get<double>();
    if (j.contains("max_block_rows")) c.max_block_rows = j["max_block_rows"].get<int>();
    if (j.contains("date_horizon_days"))
        c.date_horizon_days = j["date_horizon_days"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<int>();
    if (j.contains("guard_band")) c.guard_band = j["guard_band"].get<double>();
    if (j.contains("classifier_epochs")) c.classifier_epochs = j["classifier_epochs"].get<int>();
    return c;
}

std::string Predicate::repr() const {
    switch (kind) {
        case PredicateKind::CommonTokens:
            return "common_" + std::to_string(param) + "_tokens(" + field + ")";
        case PredicateKind::SamePrefix:
            return "same_prefix_" + std::to_string(param) + "(" + field + ")";
        case PredicateKind::Exact: return "exact(" + field + ")";
    }
    return "?";
}

double MatchModel::probability(const std::vector<float>& features) const {
    return probability_raw(weights, bias, features);
}

nlohmann::json MatchModel::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["match_threshold"] = match_threshold;
    j["bias"] = bias;
    j["weights"] = weights;
    j["fields"] = fields;
    j["coverage_reached"] = coverage_reached;
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& conj : predicates) {
        nlohmann::json cj = nlohmann::json::array();
        for (const auto& p : conj) {
            nlohmann::json pj;
            pj["kind"] = p.kind == PredicateKind::CommonTokens ? "common_tokens"
                         : p.kind == PredicateKind::SamePrefix ? "same_prefix"
                                                               : "exact";
            pj["param"] = p.param;
            pj["field"] = p.field;
            cj.push_back(pj);
        }
        preds.push_back(cj);
    }
    j["predicates"] = preds;
    return j;
}

MatchModel MatchModel::from_json(const nlohmann::json& j) {
    MatchModel m;
    m.version = j.at("version").get<int>();
    m.match_threshold = j.at("match_threshold").get<double>();
    m.bias = j.at("bias").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.fields = j.at("fields").get<std::vector<std::string>>();
    if (j.contains("coverage_reached")) m.coverage_reached = j["coverage_reached"].get<bool>();
    for (const auto& cj : j.at("predicates")) {
        PredicateConjunction conj;
        for (const auto& pj : cj) {
            Predicate p;
            std::string kind = pj.at("kind").get<std::string>();
            p.kind = kind == "common_tokens" ? PredicateKind::CommonTokens
                     : kind == "same_prefix" ? PredicateKind::SamePrefix
                                             : PredicateKind::Exact;
            p.param = pj.at("param").get<int>();
            p.field = pj.at("field").get<std::string>();
            conj.push_back(p);
        }
        m.predicates.push_back(conj);
    }
    return m;
}

FeatureExtractor::FeatureExtractor(const Table& t, const ErConfig& cfg) {
    rows_ = t.row_count();
    fields_ = cfg.compare_fields;
    if (fields_.empty())
        for (const auto& col : t.columns()) fields_.push_back(col.name);

    weights_.assign(fields_.size(), 1.0 / static_cast<double>(fields_.size()));
    if (!cfg.field_weights.empty()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            auto it = cfg.field_weights.find(fields_[i]);
            weights_[i] = it != cfg.field_weights.end() ? it->second : 0.0;
            sum += weights_[i];
        }
        if (sum <= 0.0) fail(ErrorCode::AllZeroWeights, "field weights sum to zero");
        for (auto& w : weights_) w /= sum;
    }

    date_horizon_s_ = cfg.date_horizon_days * 86400.0;
    data_.resize(fields_.size());
    norm_.resize(fields_.size());
    ranges_.assign(fields_.size(), 0.0);
    for (std::size_t f = 0; f < fields_.size(); ++f) {
        auto idx = t.column_index(fields_[f]);
        if (!idx) fail(ErrorCode::SchemaMismatch, "compare field '" + fields_[f] + "' not found");
        const Column& col = t.column(*idx);
        data_[f].resize(rows_);
        norm_[f].resize(rows_);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows_; ++r) {
            const Cell& cell = col.cells[r];
            FieldData& fd = data_[f][r];
            switch (cell.tag) {
                case Cell::Tag::Missing: fd.repr_kind = Repr::Missing; break;
                case Cell::Tag::Number:
                    fd.repr_kind = Repr::Number;
                    fd.num = cell.num;
                    lo = std::min(lo, cell.num);
                    hi = std::max(hi, cell.num);
                    break;
                case Cell::Tag::Timestamp:
                    fd.repr_kind = Repr::Date;
                    fd.ts = cell.ts;
                    break;
                case Cell::Tag::Text: {
                    fd.repr_kind = Repr::Text;
                    break;
                }
            }
            norm_[f][r] = normalize_for_key(cell.content());
            if (cell.tag == Cell::Tag::Text) fd.grams = text::gram_vector(norm_[f][r]);
        }
        if (std::isfinite(lo) && hi > lo) ranges_[f] = hi - lo;
    }
}

std::vector<float> FeatureExtractor::features(std::size_t row_a, std::size_t row_b) const {
    std::vector<float> out(fields_.size(), 0.0f);
    for (std::size_t f = 0; f < fields_.size(); ++f) {
        const FieldData& a = data_[f][row_a];
        const FieldData& b = data_[f][row_b];
        if (a.repr_kind != b.repr_kind) continue;  // includes Missing-vs-anything -> 0
        switch (a.repr_kind) {
            case Repr::Missing: break;
            case Repr::Number: {
                if (ranges_[f] <= 0.0) {
                    out[f] = a.num == b.num ? 1.0f : 0.0f;
                } else {
                    double sim = 1.0 - std::abs(a.num - b.num) / ranges_[f];
                    out[f] = static_cast<float>(std::clamp(sim, 0.0, 1.0));
                }
                break;
            }
            case Repr::Date: {
                double sim = 1.0 - std::abs(static_cast<double>(a.ts - b.ts)) / date_horizon_s_;
                out[f] = static_cast<float>(std::clamp(sim, 0.0, 1.0));
                break;
            }
            case Repr::Text: out[f] = static_cast<float>(text::cosine(a.grams, b.grams)); break;
        }
    }
    return out;
}

void FeatureExtractor::fill_features(CandidatePair& pair) const {
    pair.features = features(pair.row_a, pair.row_b);
    pair.weighted_sim = weighted(pair.features);
}

double FeatureExtractor::weighted(const std::vector<float>& features) const {
    double s = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) s += weights_[i] * features[i];
    return s;
}

const std::string& FeatureExtractor::normalized(std::size_t row, std::size_t field_idx) const {
    return norm_[field_idx][row];
}

std::vector<CandidatePair> sorted_neighborhood(const Table& t, const FeatureExtractor& fx,
                                               const std::vector<std::string>& key_fields,
                                               int window) {
    if (key_fields.empty()) fail(ErrorCode::BadConfig, "sorted_neighborhood needs key fields");
    if (window < 2 || static_cast<std::size_t>(window) > t.row_count())
        fail(ErrorCode::WindowTooLarge,
             "window " + std::to_string(window) + " outside [2, rows]");

    std::vector<std::size_t> key_idx;
    for (const auto& kf : key_fields) {
        auto it = std::find(fx.fields().begin(), fx.fields().end(), kf);
        if (it == fx.fields().end())
            fail(ErrorCode::SchemaMismatch, "key field '" + kf + "' not among compare fields");
        key_idx.push_back(static_cast<std::size_t>(it - fx.fields().begin()));
    }

    std::vector<std::string> keys(t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        std::string k;
        for (std::size_t f : key_idx) {
            k += fx.normalized(r, f);
            k.push_back('\x1f');
        }
        keys[r] = std::move(k);
    }
    std::vector<std::size_t> order(t.row_count());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&keys](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] < keys[b];
        return a < b;
    });

    std::vector<CandidatePair> pairs;
    pairs.reserve(t.row_count() * static_cast<std::size_t>(window - 1));
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size() && j - i < static_cast<std::size_t>(window);
             ++j) {
            CandidatePair p;
            p.row_a = static_cast<uint32_t>(std::min(order[i], order[j]));
            p.row_b = static_cast<uint32_t>(std::max(order[i], order[j]));
            fx.fill_features(p);
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

LabeledSet auto_label(const std::vector<CandidatePair>& pairs, double lo, double hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0))
        fail(ErrorCode::BadConfig, "auto_label thresholds need 0 <= lo < hi <= 1");
    LabeledSet out;
    for (const auto& p : pairs) {
        if (p.weighted_sim >= hi) out.positives.push_back(p);
        else if (p.weighted_sim <= lo) out.negatives.push_back(p);
    }
    if (out.positives.empty() && out.negatives.empty())
        fail(ErrorCode::EmptyTrainingSet, "no pair cleared either auto-label threshold");
    return out;
}

namespace {

// Keys a predicate emits for one row; pair passes when key sets intersect.
std::vector<uint64_t> predicate_keys(const Predicate& p, uint64_t salt,
                                     const std::string& normalized_value) {
    std::vector<uint64_t> keys;
    if (normalized_value.empty()) return keys;
    switch (p.kind) {
        case PredicateKind::Exact: keys.push_back(hash_key(salt, normalized_value)); break;
        case PredicateKind::SamePrefix: {
            std::string_view v = normalized_value;
            keys.push_back(hash_key(salt, v.substr(0, std::min<std::size_t>(v.size(), p.param))));
            break;
        }
        case PredicateKind::CommonTokens: {
            auto toks = text::tokens(normalized_value);
            int k = p.param;
            if (static_cast<int>(toks.size()) < k) break;
            for (std::size_t i = 0; i + k <= toks.size(); ++i) {
                std::string window_key;
                for (int j = 0; j < k; ++j) {
                    window_key += toks[i + j];
                    window_key.push_back(' ');
                }
                keys.push_back(hash_key(salt, window_key));
            }
            break;
        }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys;
}

bool sorted_intersects(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i;
        else ++j;
    }
    return false;
}

std::vector<Predicate> predicate_library(const std::vector<std::string>& fields) {
    std::vector<Predicate> lib;
    for (const auto& f : fields) {
        for (int k : {1, 2, 3}) lib.push_back({PredicateKind::CommonTokens, k, f});
        for (int k : {3, 5, 7}) lib.push_back({PredicateKind::SamePrefix, k, f});
        lib.push_back({PredicateKind::Exact, 0, f});
    }
    return lib;
}

// Per-row key sets for one predicate over the labeled pairs' rows.
class PredicateEvaluator {
public:
    PredicateEvaluator(const FeatureExtractor& fx, const std::vector<Predicate>& library)
        : fx_(fx), library_(library) {
        cache_.resize(library.size());
        field_of_.resize(library.size());
        for (std::size_t p = 0; p < library.size(); ++p) {
            auto it = std::find(fx.fields().begin(), fx.fields().end(), library[p].field);
            field_of_[p] = static_cast<std::size_t>(it - fx.fields().begin());
        }
    }

    const std::vector<uint64_t>& keys(std::size_t pred_idx, std::size_t row) {
        auto& row_cache = cache_[pred_idx];
        auto it = row_cache.find(row);
        if (it != row_cache.end()) return it->second;
        auto computed = predicate_keys(library_[pred_idx], pred_idx * 1315423911ull + 17,
                                       fx_.normalized(row, field_of_[pred_idx]));
        return row_cache.emplace(row, std::move(computed)).first->second;
    }

    bool passes(std::size_t pred_idx, std::size_t row_a, std::size_t row_b) {
        return sorted_intersects(keys(pred_idx, row_a), keys(pred_idx, row_b));
    }

private:
    const FeatureExtractor& fx_;
    const std::vector<Predicate>& library_;
    std::vector<std::unordered_map<std::size_t, std::vector<uint64_t>>> cache_;
    std::vector<std::size_t> field_of_;
};

using CoverBits = std::vector<uint64_t>;

CoverBits make_bits(std::size_t n) { return CoverBits((n + 63) / 64, 0); }
void set_bit(CoverBits& b, std::size_t i) { b[i / 64] |= (1ull << (i % 64)); }
std::size_t count_and_notc(const CoverBits& a, const CoverBits& covered) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += std::popcount(a[i] & ~covered[i]);
    return n;
}
std::size_t count_bits(const CoverBits& a) {
    std::size_t n = 0;
    for (uint64_t w : a) n += std::popcount(w);
    return n;
}
CoverBits bits_and(const CoverBits& a, const CoverBits& b) {
    CoverBits out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] & b[i];
    return out;
}

}  // namespace

std::vector<PredicateConjunction> learn_predicates(const Table& t, const FeatureExtractor& fx,
                                                   const LabeledSet& labeled, const ErConfig& cfg,
                                                   bool* coverage_reached) {
    (void)t;
    if (labeled.positives.empty())
        fail(ErrorCode::EmptyTrainingSet, "learn_predicates needs at least one positive pair");

    auto library = predicate_library(fx.fields());
    PredicateEvaluator eval(fx, library);

    std::size_t n_pos = labeled.positives.size();
    std::size_t n_neg = labeled.negatives.size();

    // Coverage bitsets per single predicate.
    std::vector<CoverBits> pos_cover(library.size(), make_bits(n_pos));
    std::vector<CoverBits> neg_cover(library.size(), make_bits(n_neg));
    for (std::size_t p = 0; p < library.size(); ++p) {
        for (std::size_t i = 0; i < n_pos; ++i)
            if (eval.passes(p, labeled.positives[i].row_a, labeled.positives[i].row_b))
                set_bit(pos_cover[p], i);
        for (std::size_t i = 0; i < n_neg; ++i)
            if (eval.passes(p, labeled.negatives[i].row_a, labeled.negatives[i].row_b))
                set_bit(neg_cover[p], i);
    }

    // Candidate conjunctions: singles, then pairwise/triple refinements of the
    // strongest singles (keeps the search tractable and deterministic).
    struct Candidate {
        std::vector<std::size_t> preds;  // indices into library
        CoverBits pos, neg;
    };
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < library.size(); ++p)
        candidates.push_back({{p}, pos_cover[p], neg_cover[p]});

    std::vector<std::size_t> ranked(library.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        return count_bits(pos_cover[a]) > count_bits(pos_cover[b]);
    });
    const std::size_t top_k = std::min<std::size_t>(10, ranked.size());
    std::vector<Candidate> pairs2;
    for (std::size_t i = 0; i < top_k; ++i) {
        for (std::size_t j = i + 1; j < top_k; ++j) {
            Candidate c;
            c.preds = {std::min(ranked[i], ranked[j]), std::max(ranked[i], ranked[j])};
            c.pos = bits_and(pos_cover[ranked[i]], pos_cover[ranked[j]]);
            c.neg = bits_and(neg_cover[ranked[i]], neg_cover[ranked[j]]);
            if (count_bits(c.pos) > 0) pairs2.push_back(c);
        }
    }
    std::vector<Candidate> triples;
    for (const auto& pc : pairs2) {
        for (std::size_t i = 0; i < top_k; ++i) {
            std::size_t extra = ranked[i];
            if (std::find(pc.preds.begin(), pc.preds.end(), extra) != pc.preds.end()) continue;
            Candidate c;
            c.preds = pc.preds;
            c.preds.push_back(extra);
            std::sort(c.preds.begin(), c.preds.end());
            c.pos = bits_and(pc.pos, pos_cover[extra]);
            c.neg = bits_and(pc.neg, neg_cover[extra]);
            if (count_bits(c.pos) > 0) triples.push_back(c);
        }
    }
    candidates.insert(candidates.end(), pairs2.begin(), pairs2.end());
    candidates.insert(candidates.end(), triples.begin(), triples.end());

    // Greedy cover: new positives per admitted negative.
    CoverBits covered = make_bits(n_pos);
    std::size_t covered_count = 0;
    std::vector<PredicateConjunction> chosen;
    std::vector<bool> used(candidates.size(), false);
    std::size_t target = static_cast<std::size_t>(std::ceil(cfg.target_recall * n_pos));
    while (covered_count < target) {
        double best_score = 0.0;
        std::size_t best_idx = candidates.size();
        std::size_t best_new = 0;
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            if (used[ci]) continue;
            std::size_t new_pos = count_and_notc(candidates[ci].pos, covered);
            if (new_pos == 0) continue;
            std::size_t negs = count_bits(candidates[ci].neg);
            double score = static_cast<double>(new_pos) / (1.0 + static_cast<double>(negs));
            if (score > best_score) {
                best_score = score;
                best_idx = ci;
                best_new = new_pos;
            }
        }
        if (best_idx == candidates.size()) break;  // no conjunction adds coverage
        used[best_idx] = true;
        for (std::size_t i = 0; i < covered.size(); ++i) covered[i] |= candidates[best_idx].pos[i];
        covered_count += best_new;
        PredicateConjunction conj;
        for (std::size_t p : candidates[best_idx].preds) conj.push_back(library[p]);
        chosen.push_back(conj);
    }
    if (coverage_reached) *coverage_reached = covered_count >= target;
    if (chosen.empty()) {
        // best effort: the single predicate covering the most positives
        chosen.push_back({library[ranked[0]]});
        if (coverage_reached) *coverage_reached = false;
    }
    return chosen;
}

MatchModel train_classifier(const LabeledSet& labeled, int seed, int epochs,
                            const MatchModel* warm_start) {
    if (labeled.positives.empty() || labeled.negatives.empty())
        fail(ErrorCode::SingleClassTraining, "need both positive and negative pairs");

    std::vector<FeatureRow> pos, neg;
    for (const auto& p : labeled.positives) pos.emplace_back(p.features, uint8_t{1});
    for (const auto& p : labeled.negatives) neg.emplace_back(p.features, uint8_t{0});

    std::mt19937_64 rng(static_cast<uint64_t>(seed));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    // 75/25 stratified split; tiny classes keep at least one training row.
    auto split = [](std::vector<FeatureRow>& v, std::vector<FeatureRow>& train,
                    std::vector<FeatureRow>& hold) {
        std::size_t cut = std::max<std::size_t>(1, (v.size() * 3) / 4);
        for (std::size_t i = 0; i < v.size(); ++i)
            (i < cut ? train : hold).push_back(std::move(v[i]));
    };
    std::vector<FeatureRow> train, hold;
    split(pos, train, hold);
    split(neg, train, hold);

    MatchModel m;
    if (warm_start) {
        m.weights = warm_start->weights;
        m.bias = warm_start->bias;
        m.fields = warm_start->fields;
        m.version = warm_start->version;
        m.predicates = warm_start->predicates;
    }
    fit_logistic(train, m.weights, m.bias, epochs);

    const auto& tune_set = hold.empty() ? train : hold;
    std::vector<double> probs;
    std::vector<uint8_t> labels;
    for (const auto& [x, y] : tune_set) {
        probs.push_back(probability_raw(m.weights, m.bias, x));
        labels.push_back(y);
    }
    m.match_threshold = tune_threshold(probs, labels);
    m.version += 1;
    return m;
}

MatchModel fit(const Table& t, const ErConfig& cfg) {
    FeatureExtractor fx(t, cfg);
    auto pairs = sorted_neighborhood(t, fx, cfg.key_fields, cfg.window);
    auto labeled = auto_label(pairs, cfg.auto_label_lo, cfg.auto_label_hi);
    bool coverage = true;
    auto predicates = learn_predicates(t, fx, labeled, cfg, &coverage);
    MatchModel m = train_classifier(labeled, cfg.seed, cfg.classifier_epochs);
    m.predicates = std::move(predicates);
    m.fields = fx.fields();
    m.coverage_reached = coverage;
    return m;
}

namespace {

// Candidate generation from blocking predicates. Oversized blocks emit a
// sorted chain instead of all pairs, which preserves transitive clustering
// of identical records without quadratic cost.
std::vector<CandidatePair> blocked_candidates(const Table& t, const FeatureExtractor& fx,
                                              const MatchModel& model, const ErConfig& cfg) {
    std::vector<Predicate> library;
    std::vector<std::vector<std::size_t>> conj_pred_idx(model.predicates.size());
    for (std::size_t c = 0; c < model.predicates.size(); ++c) {
        for (const auto& p : model.predicates[c]) {
            auto it = std::find(library.begin(), library.end(), p);
            std::size_t idx;
            if (it == library.end()) {
                library.push_back(p);
                idx = library.size() - 1;
            } else {
                idx = static_cast<std::size_t>(it - library.begin());
            }
            conj_pred_idx[c].push_back(idx);
        }
    }

    // Per-predicate key lists per row, and key -> rows blocks.
    std::vector<std::size_t> field_of(library.size());
    for (std::size_t p = 0; p < library.size(); ++p) {
        auto it = std::find(fx.fields().begin(), fx.fields().end(), library[p].field);
        if (it == fx.fields().end())
            fail(ErrorCode::SchemaMismatch, "predicate field '" + library[p].field + "' missing");
        field_of[p] = static_cast<std::size_t>(it - fx.fields().begin());
    }
    std::vector<std::vector<std::vector<uint64_t>>> row_keys(library.size());
    std::vector<std::unordered_map<uint64_t, std::vector<uint32_t>>> blocks(library.size());
    for (std::size_t p = 0; p < library.size(); ++p) {
        row_keys[p].resize(t.row_count());
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            row_keys[p][r] =
                predicate_keys(library[p], p * 1315423911ull + 17, fx.normalized(r, field_of[p]));
            for (uint64_t k : row_keys[p][r]) blocks[p][k].push_back(static_cast<uint32_t>(r));
        }
    }

    auto enumeration_cost = [&](std::size_t p) {
        std::size_t cost = 0;
        for (const auto& [key, rows] : blocks[p]) {
            std::size_t n = rows.size();
            if (n < 2) continue;
            cost += n <= static_cast<std::size_t>(cfg.max_block_rows) ? n * (n - 1) / 2 : n - 1;
        }
        return cost;
    };

    std::unordered_set<uint64_t> seen;
    std::vector<CandidatePair> out;
    for (std::size_t c = 0; c < model.predicates.size(); ++c) {
        const auto& preds = conj_pred_idx[c];
        std::size_t driver = preds[0];
        for (std::size_t p : preds)
            if (enumeration_cost(p) < enumeration_cost(driver)) driver = p;

        // deterministic block order
        std::vector<uint64_t> block_keys;
        block_keys.reserve(blocks[driver].size());
        for (const auto& [key, rows] : blocks[driver])
            if (rows.size() >= 2) block_keys.push_back(key);
        std::sort(block_keys.begin(), block_keys.end());

        auto consider = [&](uint32_t a, uint32_t b) {
            if (a == b) return;
            if (a > b) std::swap(a, b);
            for (std::size_t p : preds) {
                if (p == driver) continue;
                if (!sorted_intersects(row_keys[p][a], row_keys[p][b])) return;
            }
            uint64_t id = (static_cast<uint64_t>(a) << 32) | b;
            if (!seen.insert(id).second) return;
            CandidatePair pair;
            pair.row_a = a;
            pair.row_b = b;
            fx.fill_features(pair);
            out.push_back(std::move(pair));
        };

        for (uint64_t key : block_keys) {
            const auto& rows = blocks[driver][key];
            if (rows.size() <= static_cast<std::size_t>(cfg.max_block_rows)) {
                for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = i + 1; j < rows.size(); ++j) consider(rows[i], rows[j]);
            } else {
                for (std::size_t i = 0; i + 1 < rows.size(); ++i) consider(rows[i], rows[i + 1]);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
        if (x.row_a != y.row_a) return x.row_a < y.row_a;
        return x.row_b < y.row_b;
    });
    return out;
}

}  // namespace

ResolveDetail resolve_detail(const Table& t, const MatchModel& model, const ErConfig& cfg) {
    ResolveDetail detail;
    if (t.row_count() < 2) return detail;
    FeatureExtractor fx(t, cfg);
    detail.candidates = blocked_candidates(t, fx, model, cfg);
    detail.is_match.resize(detail.candidates.size(), 0);

    UnionFind uf(t.row_count());
    for (std::size_t i = 0; i < detail.candidates.size(); ++i) {
        const auto& p = detail.candidates[i];
        if (model.probability(p.features) >= model.match_threshold) {
            detail.is_match[i] = 1;
            uf.unite(p.row_a, p.row_b);
        }
    }
    std::unordered_map<std::size_t, DuplicateCluster> groups;
    for (std::size_t i = 0; i < detail.candidates.size(); ++i) {
        if (!detail.is_match[i]) continue;
        groups[uf.find(detail.candidates[i].row_a)];
    }
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        auto it = groups.find(uf.find(r));
        if (it != groups.end()) it->second.push_back(r);
    }
    for (auto& [root, members] : groups) {
        if (members.size() >= 2) detail.clusters.push_back(std::move(members));
    }
    std::sort(detail.clusters.begin(), detail.clusters.end());
    return detail;
}

std::vector<DuplicateCluster> resolve(const Table& t, const MatchModel& model,
                                      const ErConfig& cfg) {
    return resolve_detail(t, model, cfg).clusters;
}

MergeResult merge_cluster(const Table& t, const DuplicateCluster& cluster, MergeStrategy strategy,
                          const std::map<std::size_t, int>* source_rank) {
    if (cluster.size() < 2) fail(ErrorCode::BadClusterIndex, "cluster needs at least two rows");
    for (std::size_t r : cluster)
        if (r >= t.row_count()) fail(ErrorCode::BadClusterIndex, "cluster row out of range");

    MergeResult result;
    result.retired = cluster;
    std::sort(result.retired.begin(), result.retired.end());

    auto row_cells = [&t](std::size_t r) {
        std::vector<Cell> cells;
        for (std::size_t c = 0; c < t.column_count(); ++c) cells.push_back(t.at(r, c));
        return cells;
    };

    switch (strategy) {
        case MergeStrategy::MostReliable: {
            if (!source_rank)
                fail(ErrorCode::MissingSourceRank, "most_reliable merge needs source ranks");
            std::size_t best = result.retired[0];
            int best_rank = std::numeric_limits<int>::max();
            for (std::size_t r : result.retired) {
                auto it = source_rank->find(r);
                if (it == source_rank->end())
                    fail(ErrorCode::MissingSourceRank, "no rank for row " + std::to_string(r));
                if (it->second < best_rank) {
                    best_rank = it->second;
                    best = r;
                }
            }
            result.merged = row_cells(best);
            break;
        }
        case MergeStrategy::MostComplete: {
            std::size_t best = result.retired[0];
            std::size_t best_missing = std::numeric_limits<std::size_t>::max();
            for (std::size_t r : result.retired) {
                std::size_t missing = 0;
                for (std::size_t c = 0; c < t.column_count(); ++c)
                    if (t.at(r, c).missing()) ++missing;
                if (missing < best_missing) {  // tie keeps the lowest row index
                    best_missing = missing;
                    best = r;
                }
            }
            result.merged = row_cells(best);
            break;
        }
        case MergeStrategy::Fused: {
            for (std::size_t c = 0; c < t.column_count(); ++c) {
                // modal non-missing value; ties take the lowest row's value
                std::size_t best_row = t.row_count();
                std::size_t best_count = 0;
                for (std::size_t i = 0; i < result.retired.size(); ++i) {
                    const Cell& v = t.at(result.retired[i], c);
                    if (v.missing()) continue;
                    std::size_t count = 0;
                    for (std::size_t r : result.retired)
                        if (cell_equal(v, t.at(r, c))) ++count;
                    if (count > best_count) {
                        best_count = count;
                        best_row = result.retired[i];
                    }
                }
                result.merged.push_back(best_row == t.row_count() ? Cell::make_missing()
                                                                  : t.at(best_row, c));
            }
            break;
        }
    }
    return result;
}

ContinualUpdateResult continual_update(const OnlineModel& current, const Table& batch,
                                       const std::vector<std::pair<std::size_t, std::size_t>>&
                                           operational_matches,
                                       const ErConfig& cfg) {
    if (batch.row_count() == 0) fail(ErrorCode::EmptyTrainingSet, "continual_update needs a batch");

    // 1-4: build dataset, compute similarities, select by threshold, label.
    FeatureExtractor fx(batch, cfg);
    std::vector<FeatureRow> fresh;
    if (batch.row_count() >= 2 && static_cast<std::size_t>(cfg.window) <= batch.row_count()) {
        auto pairs = sorted_neighborhood(batch, fx, cfg.key_fields, cfg.window);
        for (const auto& p : pairs) {
            if (p.weighted_sim >= cfg.auto_label_hi) fresh.emplace_back(p.features, uint8_t{1});
            else if (p.weighted_sim <= cfg.auto_label_lo)
                fresh.emplace_back(p.features, uint8_t{0});
        }
    }
    for (const auto& [a, b] : operational_matches) {
        if (a >= batch.row_count() || b >= batch.row_count())
            fail(ErrorCode::BadClusterIndex, "operational match row out of range");
        fresh.emplace_back(fx.features(a, b), uint8_t{1});
    }

    // Rolling buffers: every fourth fresh pair feeds the holdout.
    ContinualUpdateResult result;
    result.updated = current;
    auto& upd = result.updated;
    std::vector<FeatureRow> fresh_train;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        if (i % 4 == 3) upd.holdout.push_back(fresh[i]);
        else fresh_train.push_back(fresh[i]);
    }
    constexpr std::size_t kBufferCap = 4000;
    auto cap_front = [](std::vector<FeatureRow>& v, std::size_t cap) {
        if (v.size() > cap) v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() - cap));
    };
    upd.replay.insert(upd.replay.end(), fresh_train.begin(), fresh_train.end());
    cap_front(upd.replay, kBufferCap);
    cap_front(upd.holdout, kBufferCap);

    // 5: retrain from the current weights on replay + fresh pairs.
    bool has_pos = false, has_neg = false;
    for (const auto& fr : upd.replay) (fr.second ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        // degraded batch: keep the previous model, log via accepted=false
        result.accepted = false;
        result.f_before = current.holdout_f;
        result.f_after = current.holdout_f;
        result.updated = current;
        return result;
    }

    MatchModel retrained = current.model;
    fit_logistic(upd.replay, retrained.weights, retrained.bias, cfg.classifier_epochs);
    std::vector<double> probs;
    std::vector<uint8_t> labels;
    const auto& tune_set = upd.holdout.empty() ? upd.replay : upd.holdout;
    for (const auto& [x, y] : tune_set) {
        probs.push_back(probability_raw(retrained.weights, retrained.bias, x));
        labels.push_back(y);
    }
    retrained.match_threshold = tune_threshold(probs, labels);

    // 6: evaluate on the rolling holdout; guard band decides adoption.
    result.f_before = upd.holdout.empty() ? 0.0 : evaluate_f(current.model, upd.holdout);
    result.f_after = upd.holdout.empty() ? 0.0 : evaluate_f(retrained, upd.holdout);
    if (!upd.holdout.empty() && result.f_after < result.f_before - cfg.guard_band) {
        result.accepted = false;  // previous model kept
        upd.model = current.model;
        upd.holdout_f = result.f_before;
    } else {
        retrained.version = current.model.version + 1;
        upd.model = retrained;
        upd.holdout_f = result.f_after;
        result.accepted = true;
    }
    return result;
}

PairScore pairwise_score(const std::vector<DuplicateCluster>& predicted,
                         const std::vector<std::pair<std::size_t, std::size_t>>& true_pairs) {
    std::unordered_set<uint64_t> truth;
    for (auto [a, b] : true_pairs) {
        if (a > b) std::swap(a, b);
        truth.insert((static_cast<uint64_t>(a) << 32) | b);
    }
    PairScore s;
    std::unordered_set<uint64_t> predicted_pairs;
    for (const auto& cluster : predicted) {
        for (std::size_t i = 0; i < cluster.size(); ++i)
            for (std::size_t j = i + 1; j < cluster.size(); ++j) {
                uint64_t id = (static_cast<uint64_t>(cluster[i]) << 32) | cluster[j];
                predicted_pairs.insert(id);
            }
    }
    for (uint64_t id : predicted_pairs) {
        if (truth.count(id)) ++s.tp;
        else ++s.fp;
    }
    for (uint64_t id : truth)
        if (!predicted_pairs.count(id)) ++s.fn;
    s.precision = (s.tp + s.fp) ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
    s.recall = (s.tp + s.fn) ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
    s.f_score = f_score_of(s.tp, s.fp, s.fn);
    return s;
}

nlohmann::json clusters_to_json(const std::vector<DuplicateCluster>& clusters, int model_version) {
    nlohmann::json j;
    j["model_version"] = model_version;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : clusters) arr.push_back(c);
    j["clusters"] = arr;
    return j;
}

}  // namespace dq::er
