#include "dq/correct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <tuple>
#include <unordered_map>

#include "dq/correlate.hpp"
#include "dq/embed.hpp"
#include "dq/error.hpp"
#include "dq/text.hpp"

namespace dq::correct {

namespace {

using CellRef = std::pair<std::size_t, std::size_t>;  // row, col

bool kind_conforms(const Table& t, std::size_t row, std::size_t col) {
    ValueKind k = t.kind_at(row, col);
    switch (t.column(col).declared_kind) {
        case DeclaredKind::Numeric: return k == ValueKind::Numeric;
        case DeclaredKind::String: return k == ValueKind::String;
        case DeclaredKind::Date: return k == ValueKind::Date;
    }
    return false;
}

// Feature encoder over a fixed stage table: numeric columns pass through
// (NaN for missing/nonconforming), categorical columns label-encode.
class Encoder {
public:
    Encoder(const Table& t, const std::vector<std::string>& feature_names) : table_(t) {
        for (const auto& name : feature_names) {
            auto idx = t.column_index(name);
            if (!idx) continue;
            cols_.push_back(*idx);
            const Column& col = t.column(*idx);
            if (col.declared_kind == DeclaredKind::String) {
                std::map<std::string, float> codes;
                for (const auto& cell : col.cells) {
                    if (cell.tag != Cell::Tag::Text) continue;
                    codes.emplace(cell.text, 0.0f);
                }
                float next = 0.0f;
                for (auto& [value, code] : codes) code = next++;
                label_codes_.push_back(std::move(codes));
            } else {
                label_codes_.emplace_back();
            }
        }
    }

    std::size_t dims() const { return cols_.size(); }

    void encode(std::size_t row, float* out) const {
        for (std::size_t i = 0; i < cols_.size(); ++i) {
            const Cell& cell = table_.at(row, cols_[i]);
            const Column& col = table_.column(cols_[i]);
            if (col.declared_kind == DeclaredKind::String) {
                if (cell.tag == Cell::Tag::Text) {
                    auto it = label_codes_[i].find(cell.text);
                    out[i] = it != label_codes_[i].end() ? it->second : -1.0f;
                } else {
                    out[i] = -1.0f;
                }
            } else {
                switch (cell.tag) {
                    case Cell::Tag::Number: out[i] = static_cast<float>(cell.num); break;
                    case Cell::Tag::Timestamp:
                        out[i] = static_cast<float>(static_cast<double>(cell.ts) / 86400.0);
                        break;
                    default: out[i] = std::numeric_limits<float>::quiet_NaN(); break;
                }
            }
        }
    }

private:
    const Table& table_;
    std::vector<std::size_t> cols_;
    std::vector<std::map<std::string, float>> label_codes_;
};

struct TrainedModel {
    gbt::GbtModel model;
    std::vector<std::string> features;
};

double target_numeric(const Cell& cell) {
    if (cell.tag == Cell::Tag::Number) return cell.num;
    if (cell.tag == Cell::Tag::Timestamp) return static_cast<double>(cell.ts) / 86400.0;
    return 0.0;
}

std::vector<std::size_t> stride_sample(const std::vector<std::size_t>& rows, std::size_t cap) {
    if (rows.size() <= cap) return rows;
    std::vector<std::size_t> out;
    out.reserve(cap);
    double step = static_cast<double>(rows.size()) / static_cast<double>(cap);
    for (std::size_t i = 0; i < cap; ++i)
        out.push_back(rows[static_cast<std::size_t>(static_cast<double>(i) * step)]);
    return out;
}

// Engine state shared by the dimension stages.
struct Session {
    const Table& input;
    const anomaly::AnomalyReport& report;
    const CorrectionConfig& cfg;
    const Lexicon* lexicon;

    std::vector<std::vector<Cell>> cells;  // [col][row], the working overlay
    std::vector<bool> retired;
    std::vector<std::vector<Cell>> merged_rows;  // appended at the end
    std::vector<RowMeta> merged_meta;
    std::vector<std::size_t> merged_cluster_id;
    std::vector<ChangeLogEntry> log;
    std::size_t fallbacks = 0;

    std::set<CellRef> anomalous_cells;
    std::map<CellRef, std::string> cleared_original;  // accuracy stage keeps the outlier
    std::map<std::string, std::vector<const anomaly::AnomalyRecord*>> records_by_dim;
    std::map<std::string, TrainedModel> model_cache;

    std::optional<Table> stage;  // materialized working table
    std::size_t stage_epoch = 0;
    std::map<std::string, std::shared_ptr<Encoder>> encoder_cache;  // per stage epoch
    std::map<std::size_t, std::map<std::string, std::vector<std::size_t>>> content_rows_cache;
    std::map<std::string, std::vector<std::string>> feature_cache;  // per stage epoch

    explicit Session(const Table& t, const anomaly::AnomalyReport& r,
                     const CorrectionConfig& c, const Lexicon* lex)
        : input(t), report(r), cfg(c), lexicon(lex) {
        cells.resize(t.column_count());
        for (std::size_t col = 0; col < t.column_count(); ++col)
            cells[col] = t.column(col).cells;
        retired.assign(t.row_count(), false);
        for (const auto& rec : r.records) {
            records_by_dim[to_string(rec.dimension)].push_back(&rec);
            if (!rec.column.empty()) {
                auto idx = t.column_index(rec.column);
                if (idx) anomalous_cells.insert({rec.row, *idx});
            }
        }
    }

    const Table& stage_table() {
        if (!stage) {
            std::vector<std::vector<Cell>> copy = cells;
            stage = with_cells(input, std::move(copy));
        }
        return *stage;
    }

    void invalidate_stage() {
        stage.reset();
        ++stage_epoch;
        encoder_cache.clear();
        content_rows_cache.clear();
        feature_cache.clear();
    }

    std::shared_ptr<Encoder> encoder_for(const std::vector<std::string>& features) {
        std::string key;
        for (const auto& f : features) {
            key += f;
            key.push_back('\x1f');
        }
        auto it = encoder_cache.find(key);
        if (it != encoder_cache.end()) return it->second;
        auto enc = std::make_shared<Encoder>(stage_table(), features);
        encoder_cache.emplace(key, enc);
        return enc;
    }

    /// Distinct clean contents of a column mapped to their rows; built once
    /// per stage so similarity gates run over distinct values, not rows.
    const std::map<std::string, std::vector<std::size_t>>& clean_content_rows(std::size_t col);

    void write_cell(std::size_t row, std::size_t col, Cell cell, Dimension dim,
                    const gbt::Prediction& pred, const std::string& model_id) {
        ChangeLogEntry entry;
        entry.row = row;
        entry.column = input.column(col).name;
        entry.dimension = dim;
        auto cleared = cleared_original.find({row, col});
        entry.old_value =
            cleared != cleared_original.end() ? cleared->second : cells[col][row].content();
        entry.new_value = cell.content();
        entry.confidence = pred.confidence;
        entry.model_id = model_id;
        if (pred.binned) {
            entry.has_bin = true;
            entry.bin_lo = pred.bin_lo;
            entry.bin_hi = pred.bin_hi;
            entry.bin_label = pred.value;
        }
        log.push_back(std::move(entry));
        cells[col][row] = std::move(cell);
    }

    Cell cell_from_prediction(std::size_t col, const gbt::Prediction& pred) const {
        const Column& column = input.column(col);
        if (column.declared_kind == DeclaredKind::Numeric)
            return Cell::make_number(pred.representative);
        if (column.declared_kind == DeclaredKind::Date)
            return Cell::make_timestamp(
                static_cast<int64_t>(std::llround(pred.representative * 86400.0)));
        return Cell::make_text(pred.value);
    }
};

std::vector<std::string> features_for(Session& s, const std::string& target) {
    try {
        return correlated_features(s.stage_table(), target, s.cfg);
    } catch (const DqError& e) {
        if (e.code() == ErrorCode::NoFeatures) return {};  // base-value models still work
        throw;
    }
}

TrainedModel train_model(Session& s, std::size_t target_col,
                         const std::vector<std::size_t>& neighborhood,
                         const std::string& model_id, bool with_features = true) {
    auto cached = s.model_cache.find(model_id);
    if (cached != s.model_cache.end()) return cached->second;

    const Table& stage = s.stage_table();
    const Column& target = stage.column(target_col);
    TrainedModel tm;
    if (with_features) tm.features = features_for(s, target.name);

    auto rows = stride_sample(neighborhood, s.cfg.max_train_rows);
    auto encoder = s.encoder_for(tm.features);
    std::vector<float> x(rows.size() * encoder->dims());
    for (std::size_t i = 0; i < rows.size(); ++i)
        encoder->encode(rows[i], x.data() + i * encoder->dims());

    if (target.declared_kind == DeclaredKind::String) {
        std::vector<std::string> labels;
        labels.reserve(rows.size());
        for (std::size_t r : rows) labels.push_back(stage.at(r, target_col).content());
        tm.model = gbt::GbtModel::train_categorical(x, rows.size(), encoder->dims(), labels,
                                                    s.cfg.gbt);
    } else {
        std::vector<double> targets;
        targets.reserve(rows.size());
        for (std::size_t r : rows) targets.push_back(target_numeric(stage.at(r, target_col)));
        tm.model = gbt::GbtModel::train_binned(x, rows.size(), encoder->dims(), targets,
                                               s.cfg.bins, s.cfg.gbt);
    }
    s.model_cache.emplace(model_id, tm);
    return tm;
}

// Predicts all rows of a group with one encoder pass over the stage snapshot.
std::vector<gbt::Prediction> predict_rows(Session& s, const TrainedModel& tm,
                                          const std::vector<std::size_t>& rows) {
    auto encoder = s.encoder_for(tm.features);
    std::vector<float> x(encoder->dims());
    std::vector<gbt::Prediction> out;
    out.reserve(rows.size());
    for (std::size_t row : rows) {
        encoder->encode(row, x.data());
        out.push_back(tm.model.predict(x));
    }
    return out;
}

// Clean candidate rows for a target column: populated, conforming, not
// retired, and not flagged anywhere on that cell.
std::vector<std::size_t> clean_rows(Session& s, std::size_t col) {
    std::vector<std::size_t> rows;
    const Table& stage = s.stage_table();
    for (std::size_t r = 0; r < stage.row_count(); ++r) {
        if (s.retired[r]) continue;
        const Cell& cell = stage.at(r, col);
        if (cell.missing()) continue;
        if (!kind_conforms(stage, r, col)) continue;
        if (s.anomalous_cells.count({r, col})) continue;
        rows.push_back(r);
    }
    return rows;
}

const std::map<std::string, std::vector<std::size_t>>& Session::clean_content_rows(
    std::size_t col) {
    auto& per_col = content_rows_cache[col];
    if (per_col.empty()) {
        const Table& st = stage_table();
        for (std::size_t r = 0; r < st.row_count(); ++r) {
            if (retired[r]) continue;
            const Cell& cell = st.at(r, col);
            if (cell.missing()) continue;
            if (!kind_conforms(st, r, col)) continue;
            if (anomalous_cells.count({r, col})) continue;
            per_col[cell.content()].push_back(r);
        }
    }
    return per_col;
}

// Readability helper: misspelled tokens replaced by their nearest lexicon
// word (edit similarity, ties to the lexicographically smaller word).
std::string nearest_lexicon_value(const std::string& value, const Lexicon& lexicon) {
    std::string out;
    for (const auto& tok : text::tokens(value)) {
        std::string fixed = tok;
        bool alphabetic = std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
            return std::isalpha(c) != 0;
        });
        if (alphabetic && !lexicon.contains(tok)) {
            double best = -1.0;
            for (const auto& word : lexicon.words()) {
                double sim = text::edit_similarity(text::lowercase(tok), word);
                if (sim > best) {
                    best = sim;
                    fixed = word;
                }
            }
        }
        if (!out.empty()) out.push_back(' ');
        out += fixed;
    }
    return out;
}

void stage_value_remap(Session& s, Dimension dim) {
    auto it = s.records_by_dim.find(to_string(dim));
    if (it == s.records_by_dim.end()) return;
    s.invalidate_stage();

    // group records by (column, anomalous content)
    std::map<std::pair<std::size_t, std::string>, std::vector<std::size_t>> groups;
    for (const auto* rec : it->second) {
        if (s.retired[rec->row]) continue;
        auto col = s.input.column_index(rec->column);
        if (!col) continue;
        groups[{*col, s.cells[*col][rec->row].content()}].push_back(rec->row);
    }

    std::map<std::size_t, std::unique_ptr<embed::ColumnEmbedding>> embeddings;
    for (auto& [key, rows] : groups) {
        auto [col, value] = key;
        const auto& by_content = s.clean_content_rows(col);
        std::vector<std::size_t> neighborhood;

        if (dim == Dimension::Conformity) {
            auto& emb = embeddings[col];
            if (!emb) {
                std::vector<std::size_t> context;
                for (const auto& name : features_for(s, s.input.column(col).name)) {
                    auto idx = s.input.column_index(name);
                    if (idx) context.push_back(*idx);
                }
                emb = std::make_unique<embed::ColumnEmbedding>(s.stage_table(), col, context,
                                                               s.cfg.embed_dim, s.cfg.seed);
            }
            auto anom_vec = emb->value_embedding(value);
            for (const auto& [content, content_rows] : by_content) {
                auto vec = emb->value_embedding(content);
                if (embed::ColumnEmbedding::cosine(anom_vec, vec) >= s.cfg.we_thresh)
                    neighborhood.insert(neighborhood.end(), content_rows.begin(),
                                        content_rows.end());
            }
        } else {  // Readability
            if (!s.lexicon || s.lexicon->empty()) continue;
            std::string candidate = text::lowercase(nearest_lexicon_value(value, *s.lexicon));
            for (const auto& [content, content_rows] : by_content) {
                if (text::edit_similarity(text::lowercase(content), candidate) >=
                    s.cfg.sim_thresh)
                    neighborhood.insert(neighborhood.end(), content_rows.begin(),
                                        content_rows.end());
            }
        }
        std::sort(neighborhood.begin(), neighborhood.end());

        if (neighborhood.empty()) {
            neighborhood = clean_rows(s, col);  // EmptyNeighborhood fallback, logged
            ++s.fallbacks;
        }
        if (neighborhood.empty()) continue;  // nothing clean to learn from

        std::string model_id = std::string(to_string(dim)) + ":" +
                               s.input.column(col).name + ":" + value;
        TrainedModel tm = train_model(s, col, neighborhood, model_id);
        auto preds = predict_rows(s, tm, rows);
        for (std::size_t i = 0; i < rows.size(); ++i)
            s.write_cell(rows[i], col, s.cell_from_prediction(col, preds[i]), dim, preds[i],
                         model_id);
    }
}

void stage_consolidation(Session& s) {
    if (s.report.clusters.empty()) return;
    s.invalidate_stage();
    const Table& stage = s.stage_table();

    for (std::size_t k = 0; k < s.report.clusters.size(); ++k) {
        std::vector<std::size_t> members;
        for (std::size_t r : s.report.clusters[k])
            if (r < stage.row_count() && !s.retired[r]) members.push_back(r);
        if (members.size() < 2) continue;

        std::vector<Cell> merged(stage.column_count());
        std::string model_base = "consolidate:" + std::to_string(k);
        for (std::size_t col = 0; col < stage.column_count(); ++col) {
            std::vector<std::size_t> populated;
            for (std::size_t r : members)
                if (!stage.at(r, col).missing()) populated.push_back(r);
            if (populated.empty()) {
                merged[col] = Cell::make_missing();
                continue;
            }
            // per-field model over the cluster's own rows; the placeholder row
            // carries no feature values, so the fit is taken without feature
            // context and prediction reduces to the per-class base rate: the
            // modal value (or modal bin) of the members
            std::string model_id = model_base + ":" + stage.column(col).name;
            TrainedModel tm = train_model(s, col, populated, model_id, /*with_features=*/false);
            gbt::Prediction pred = tm.model.predict(std::span<const float>{});
            merged[col] = s.cell_from_prediction(col, pred);

            ChangeLogEntry entry;
            entry.row = s.merged_rows.size();  // patched to the output index later
            entry.output_row = true;
            entry.column = stage.column(col).name;
            entry.dimension = Dimension::Consistency;
            entry.old_value = "";
            entry.new_value = merged[col].content();
            entry.confidence = pred.confidence;
            entry.model_id = model_id;
            if (pred.binned) {
                entry.has_bin = true;
                entry.bin_lo = pred.bin_lo;
                entry.bin_hi = pred.bin_hi;
                entry.bin_label = pred.value;
            }
            s.log.push_back(std::move(entry));
        }
        for (std::size_t r : members) {
            s.retired[r] = true;
            ChangeLogEntry entry;
            entry.row = r;
            entry.dimension = Dimension::Uniqueness;
            entry.old_value = "";
            entry.new_value = "retired";
            entry.confidence = 1.0;
            entry.model_id = model_base;
            s.log.push_back(std::move(entry));
        }
        s.merged_rows.push_back(std::move(merged));
        s.merged_cluster_id.push_back(k);
        if (s.input.has_row_meta()) {
            RowMeta meta = s.input.row_meta()[members[0]];
            for (std::size_t r : members) {
                meta.created_at = std::min(meta.created_at, s.input.row_meta()[r].created_at);
                meta.modified_at = std::max(meta.modified_at, s.input.row_meta()[r].modified_at);
            }
            s.merged_meta.push_back(meta);
        }
    }
    s.invalidate_stage();
}

void stage_impute(Session& s, Dimension dim) {
    auto it = s.records_by_dim.find(to_string(dim));
    if (it == s.records_by_dim.end()) return;
    s.invalidate_stage();

    // accuracy first clears the inaccurate values, then both dimensions
    // impute like missing data
    std::map<std::size_t, std::vector<std::size_t>> rows_by_col;
    for (const auto* rec : it->second) {
        if (s.retired[rec->row]) continue;
        auto col = s.input.column_index(rec->column);
        if (!col) continue;
        if (dim == Dimension::Accuracy) {
            if (!s.cells[*col][rec->row].missing()) {
                s.cleared_original[{rec->row, *col}] = s.cells[*col][rec->row].content();
                Cell cleared = Cell::make_missing(s.cells[*col][rec->row].raw);
                s.cells[*col][rec->row] = std::move(cleared);
            }
            rows_by_col[*col].push_back(rec->row);
        } else {
            if (s.cells[*col][rec->row].missing()) rows_by_col[*col].push_back(rec->row);
        }
    }
    if (rows_by_col.empty()) return;
    s.invalidate_stage();

    for (auto& [col, rows] : rows_by_col) {
        std::vector<std::string> features = features_for(s, s.input.column(col).name);
        // exclude rows carrying anomaly flags on any selected feature
        std::vector<std::size_t> feature_cols;
        for (const auto& name : features) {
            auto idx = s.input.column_index(name);
            if (idx) feature_cols.push_back(*idx);
        }
        std::vector<std::size_t> base = clean_rows(s, col);
        std::vector<std::size_t> neighborhood;
        for (std::size_t r : base) {
            bool flagged_feature = false;
            for (std::size_t f : feature_cols)
                if (s.anomalous_cells.count({r, f})) {
                    flagged_feature = true;
                    break;
                }
            if (!flagged_feature) neighborhood.push_back(r);
        }
        if (neighborhood.empty()) {
            neighborhood = base;
            ++s.fallbacks;
        }
        if (neighborhood.empty()) continue;

        std::string model_id = "impute:" + s.input.column(col).name;
        TrainedModel tm = train_model(s, col, neighborhood, model_id);
        std::sort(rows.begin(), rows.end());
        auto preds = predict_rows(s, tm, rows);
        for (std::size_t i = 0; i < rows.size(); ++i)
            s.write_cell(rows[i], col, s.cell_from_prediction(col, preds[i]), dim, preds[i],
                         model_id);
    }
}

}  // namespace

nlohmann::json CorrectionConfig::to_json() const {
    nlohmann::json j;
    j["corr_thresh"] = corr_thresh;
    j["we_thresh"] = we_thresh;
    j["sim_thresh"] = sim_thresh;
    j["bins"] = bins;
    j["feature_allow"] = feature_allow;
    j["feature_block"] = feature_block;
    std::vector<std::string> order_names;
    for (Dimension d : order) order_names.push_back(to_string(d));
    j["order"] = order_names;
    j["seed"] = seed;
    j["gbt"] = {{"rounds", gbt.rounds},
                {"learning_rate", gbt.learning_rate},
                {"max_depth", gbt.max_depth},
                {"dropout_rate", gbt.dropout_rate},
                {"max_classes", gbt.max_classes}};
    j["max_train_rows"] = max_train_rows;
    j["embed_dim"] = embed_dim;
    return j;
}

CorrectionConfig CorrectionConfig::from_json(const nlohmann::json& j) {
    CorrectionConfig c;
    if (j.contains("corr_thresh")) c.corr_thresh = j["corr_thresh"].get<double>();
    if (j.contains("we_thresh")) c.we_thresh = j["we_thresh"].get<double>();
    if (j.contains("sim_thresh")) c.sim_thresh = j["sim_thresh"].get<double>();
    if (j.contains("bins")) c.bins = j["bins"].get<int>();
    if (j.contains("feature_allow"))
        c.feature_allow = j["feature_allow"].get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("feature_block"))
        c.feature_block = j["feature_block"].get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("order")) {
        c.order.clear();
        for (const auto& name : j["order"]) {
            auto d = dimension_from_name(name.get<std::string>());
            if (!d) fail(ErrorCode::BadConfig, "unknown dimension in correction order");
            c.order.push_back(*d);
        }
    }
    if (j.contains("seed")) {
        c.seed = j["seed"].get<uint64_t>();
        c.gbt.seed = c.seed;
    }
    if (j.contains("gbt")) {
        const auto& g = j["gbt"];
        if (g.contains("rounds")) c.gbt.rounds = g["rounds"].get<int>();
        if (g.contains("learning_rate")) c.gbt.learning_rate = g["learning_rate"].get<double>();
        if (g.contains("max_depth")) c.gbt.max_depth = g["max_depth"].get<int>();
        if (g.contains("dropout_rate")) c.gbt.dropout_rate = g["dropout_rate"].get<double>();
        if (g.contains("max_classes")) c.gbt.max_classes = g["max_classes"].get<int>();
        if (g.contains("seed")) c.gbt.seed = g["seed"].get<uint64_t>();
    }
    if (j.contains("max_train_rows")) c.max_train_rows = j["max_train_rows"].get<std::size_t>();
    if (j.contains("embed_dim")) c.embed_dim = j["embed_dim"].get<int>();
    return c;
}

nlohmann::json ChangeLogEntry::to_json() const {
    nlohmann::json j;
    j["row"] = row;
    j["column"] = column;
    j["dimension"] = to_string(dimension);
    j["old_value"] = old_value;
    j["new_value"] = new_value;
    j["confidence"] = confidence;
    j["model_id"] = model_id;
    if (has_bin) {
        j["bin_lo"] = bin_lo;
        j["bin_hi"] = bin_hi;
        j["bin_label"] = bin_label;
    }
    if (output_row) j["output_row"] = true;
    return j;
}

ChangeLogEntry ChangeLogEntry::from_json(const nlohmann::json& j) {
    ChangeLogEntry e;
    e.row = j.at("row").get<std::size_t>();
    e.column = j.at("column").get<std::string>();
    auto d = dimension_from_name(j.at("dimension").get<std::string>());
    if (!d) fail(ErrorCode::BadConfig, "unknown dimension in changelog");
    e.dimension = *d;
    e.old_value = j.at("old_value").get<std::string>();
    e.new_value = j.at("new_value").get<std::string>();
    e.confidence = j.at("confidence").get<double>();
    e.model_id = j.at("model_id").get<std::string>();
    if (j.contains("bin_label")) {
        e.has_bin = true;
        e.bin_lo = j.at("bin_lo").get<double>();
        e.bin_hi = j.at("bin_hi").get<double>();
        e.bin_label = j.at("bin_label").get<std::string>();
    }
    if (j.contains("output_row")) e.output_row = j["output_row"].get<bool>();
    return e;
}

std::vector<std::string> correlated_features(const Table& t, const std::string& target,
                                             const CorrectionConfig& cfg) {
    auto target_idx = t.column_index(target);
    if (!target_idx) fail(ErrorCode::SchemaMismatch, "target column '" + target + "' not found");
    if (t.column_count() < 2)
        fail(ErrorCode::NoFeatures, "single-column table has no features for '" + target + "'");

    std::vector<std::string> kept;
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        if (c == *target_idx) continue;
        double assoc = correlate::association(t, *target_idx, c);
        if (std::abs(assoc) >= cfg.corr_thresh) kept.push_back(t.column(c).name);
    }
    if (kept.empty()) {
        // uniformly weak correlations: consider all the dataset features
        for (std::size_t c = 0; c < t.column_count(); ++c)
            if (c != *target_idx) kept.push_back(t.column(c).name);
    }
    auto allow = cfg.feature_allow.find(target);
    if (allow != cfg.feature_allow.end())
        for (const auto& name : allow->second)
            if (std::find(kept.begin(), kept.end(), name) == kept.end() && t.column_index(name))
                kept.push_back(name);
    auto block = cfg.feature_block.find(target);
    if (block != cfg.feature_block.end())
        for (const auto& name : block->second)
            kept.erase(std::remove(kept.begin(), kept.end(), name), kept.end());
    return kept;
}

std::vector<std::size_t> select_neighborhood(const Table& t, const anomaly::AnomalyRecord& a,
                                             const CorrectionConfig& cfg, const Lexicon* lexicon,
                                             const std::set<std::pair<std::size_t, std::size_t>>&
                                                 anomalous_cells,
                                             const std::vector<er::DuplicateCluster>& clusters,
                                             bool* fell_back) {
    if (fell_back) *fell_back = false;
    if (a.dimension == Dimension::Uniqueness || a.dimension == Dimension::Consistency) {
        for (const auto& cluster : clusters)
            if (std::find(cluster.begin(), cluster.end(), a.row) != cluster.end())
                return cluster;
        return {};
    }

    anomaly::AnomalyReport tmp_report;
    tmp_report.records.push_back(a);
    tmp_report.snapshot_id = t.snapshot_id();
    Session s(t, tmp_report, cfg, lexicon);
    s.anomalous_cells = anomalous_cells;
    auto col = t.column_index(a.column);
    if (!col) return {};

    std::vector<std::size_t> base = clean_rows(s, *col);
    if (a.dimension == Dimension::Completeness || a.dimension == Dimension::Accuracy) {
        auto features = features_for(s, a.column);
        std::vector<std::size_t> out;
        for (std::size_t r : base) {
            bool flagged = false;
            for (const auto& name : features) {
                auto idx = t.column_index(name);
                if (idx && anomalous_cells.count({r, *idx})) {
                    flagged = true;
                    break;
                }
            }
            if (!flagged) out.push_back(r);
        }
        if (out.empty() && fell_back) *fell_back = true;
        return out.empty() ? base : out;
    }
    if (a.dimension == Dimension::Readability) {
        if (!lexicon || lexicon->empty()) fail(ErrorCode::EmptyLexicon, "readability needs a lexicon");
        std::string value = t.at(a.row, *col).content();
        std::string candidate = nearest_lexicon_value(value, *lexicon);
        std::vector<std::size_t> out;
        for (std::size_t r : base)
            if (text::edit_similarity(text::lowercase(t.at(r, *col).content()),
                                      text::lowercase(candidate)) >= cfg.sim_thresh)
                out.push_back(r);
        if (out.empty() && fell_back) *fell_back = true;
        return out.empty() ? base : out;
    }
    // Conformity: semantic-embedding neighborhood
    std::vector<std::size_t> context;
    for (const auto& name : features_for(s, a.column)) {
        auto idx = t.column_index(name);
        if (idx) context.push_back(*idx);
    }
    embed::ColumnEmbedding emb(t, *col, context, cfg.embed_dim, cfg.seed);
    auto anom_vec = emb.value_embedding(t.at(a.row, *col).content());
    std::vector<std::size_t> out;
    for (std::size_t r : base) {
        auto vec = emb.value_embedding(t.at(r, *col).content());
        if (embed::ColumnEmbedding::cosine(anom_vec, vec) >= cfg.we_thresh) out.push_back(r);
    }
    if (out.empty() && fell_back) *fell_back = true;
    return out.empty() ? base : out;
}

CorrectionResult correct_all(const Table& t, const anomaly::AnomalyReport& report,
                             const CorrectionConfig& cfg, const Lexicon* lexicon) {
    if (!report.snapshot_id.empty() && report.snapshot_id != t.snapshot_id())
        fail(ErrorCode::StaleReport, "anomaly report was produced on a different snapshot");

    Session s(t, report, cfg, lexicon);
    bool consolidation_done = false;
    for (Dimension dim : cfg.order) {
        switch (dim) {
            case Dimension::Conformity: stage_value_remap(s, Dimension::Conformity); break;
            case Dimension::Readability: stage_value_remap(s, Dimension::Readability); break;
            case Dimension::Uniqueness:
            case Dimension::Consistency:
                if (!consolidation_done) {
                    stage_consolidation(s);
                    consolidation_done = true;
                }
                break;
            case Dimension::Accuracy: stage_impute(s, Dimension::Accuracy); break;
            case Dimension::Completeness: stage_impute(s, Dimension::Completeness); break;
        }
    }

    // materialize: drop retired rows, append merged rows
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < t.row_count(); ++r)
        if (!s.retired[r]) kept.push_back(r);

    std::vector<Column> cols = t.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        std::vector<Cell> out;
        out.reserve(kept.size() + s.merged_rows.size());
        for (std::size_t r : kept) out.push_back(std::move(s.cells[c][r]));
        for (const auto& merged : s.merged_rows) out.push_back(merged[c]);
        cols[c].cells = std::move(out);
    }
    std::vector<RowMeta> meta;
    if (t.has_row_meta()) {
        for (std::size_t r : kept) meta.push_back(t.row_meta()[r]);
        meta.insert(meta.end(), s.merged_meta.begin(), s.merged_meta.end());
    }

    // merged-row log entries now get their final output indices
    std::map<std::size_t, std::size_t> merged_output_row;
    for (std::size_t m = 0; m < s.merged_rows.size(); ++m)
        merged_output_row[m] = kept.size() + m;
    for (auto& entry : s.log)
        if (entry.output_row) entry.row = merged_output_row[entry.row];

    CorrectionResult result{Table(std::move(cols), std::move(meta), t.date_formats()),
                            std::move(s.log), s.fallbacks};
    return result;
}

CorrectionEval evaluate_correction(const std::vector<ChangeLogEntry>& log,
                                   const GroundTruth& truth) {
    {
        std::set<std::tuple<std::size_t, std::string, Dimension>> seen;
        for (const auto& e : truth.entries)
            if (!seen.insert({e.row, e.col, e.dimension}).second)
                fail(ErrorCode::TruthMismatch, "duplicate truth entry");
    }

    // direct corrections by cell; consolidation predictions by cluster
    std::map<std::pair<std::size_t, std::string>, const ChangeLogEntry*> by_cell;
    std::map<std::size_t, std::string> retired_model;                      // row -> model base
    std::map<std::pair<std::string, std::string>, const ChangeLogEntry*> merged_fields;
    for (const auto& e : log) {
        if (e.output_row) {
            merged_fields[{e.model_id.substr(0, e.model_id.rfind(':')), e.column}] = &e;
        } else if (e.new_value == "retired" && e.column.empty()) {
            retired_model[e.row] = e.model_id;
        } else {
            by_cell[{e.row, e.column}] = &e;
        }
    }

    auto numeric_eq = [](const std::string& a, const std::string& b) {
        double va, vb;
        if (!parse_number(text::trim(a), va) || !parse_number(text::trim(b), vb)) return false;
        double scale = std::max({1.0, std::abs(va), std::abs(vb)});
        return std::abs(va - vb) <= 1e-9 * scale;
    };
    auto grade = [&](const ChangeLogEntry& e, const std::string& original) {
        if (e.has_bin) {
            double v;
            if (!parse_number(text::trim(original), v)) return false;
            return e.bin_lo <= v && v <= e.bin_hi;  // closed upper edge: the top
                                                    // bin's max is inclusive
        }
        if (text::lowercase(text::trim(e.new_value)) == text::lowercase(text::trim(original)))
            return true;
        return numeric_eq(e.new_value, original);
    };

    CorrectionEval eval;
    for (const auto& te : truth.entries) {
        const ChangeLogEntry* entry = nullptr;
        auto direct = by_cell.find({te.row, te.col});
        if (direct != by_cell.end()) {
            entry = direct->second;
        } else {
            auto retired = retired_model.find(te.row);
            if (retired != retired_model.end()) {
                auto merged = merged_fields.find({retired->second, te.col});
                if (merged != merged_fields.end()) entry = merged->second;
            }
        }
        if (!entry) continue;  // anomaly was not corrected; graded by detection eval
        ++eval.total;
        if (grade(*entry, te.original_value)) ++eval.correct;
    }
    if (eval.total == 0) {
        eval.accuracy = 1.0;
        eval.error_rate = 0.0;
    } else {
        eval.accuracy = static_cast<double>(eval.correct) / static_cast<double>(eval.total);
        eval.error_rate = 1.0 - eval.accuracy;
    }
    return eval;
}

nlohmann::json QualityDelta::to_json() const {
    nlohmann::json j;
    j["metric_deltas"] = metric_deltas;
    j["improvement_rate"] = improvement_rate;
    return j;
}

QualityDelta quality_improvement(const assess::QualityReport& before,
                                 const assess::QualityReport& after) {
    if (!(before.weights_used == after.weights_used))
        fail(ErrorCode::WeightMismatch, "reports use different weight configurations");
    QualityDelta delta;
    for (const auto& [metric_name, score] : before.metric_scores) {
        auto it = after.metric_scores.find(metric_name);
        if (it == after.metric_scores.end())
            fail(ErrorCode::MissingMetric, "metric '" + metric_name + "' missing in after-report");
        delta.metric_deltas[metric_name] = it->second - score;
    }
    delta.improvement_rate = after.global_score - before.global_score;
    return delta;
}

void write_changelog(const std::string& path, const std::vector<ChangeLogEntry>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    for (const auto& e : log) out << e.to_json().dump() << "\n";
}

std::vector<ChangeLogEntry> read_changelog(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::vector<ChangeLogEntry> log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        log.push_back(ChangeLogEntry::from_json(nlohmann::json::parse(line)));
    }
    return log;
}

}  // namespace dq::correct
