#include "dq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dq/error.hpp"
#include "dq/rng.hpp"
#include "dq/text.hpp"

namespace dq::synth {

namespace {

const std::vector<std::string>& first_names() {
    static const std::vector<std::string> v = {
        "james",  "mary",   "robert", "patricia", "john",    "jennifer", "michael", "linda",
        "david",  "elizabeth", "william", "barbara", "richard", "susan",  "joseph",  "jessica",
        "thomas", "sarah",  "charles", "karen",   "daniel",  "lisa",     "matthew", "nancy",
        "anthony", "betty", "mark",   "sandra",   "donald",  "ashley",   "steven",  "kimberly",
        "andrew", "emily",  "paul",   "donna",    "joshua",  "michelle", "kevin",   "carol"};
    return v;
}

const std::vector<std::string>& last_names() {
    static const std::vector<std::string> v = {
        "smith",    "johnson",  "williams", "brown",   "jones",    "garcia",  "miller",
        "davis",    "rodriguez", "martinez", "hernandez", "lopez",  "gonzalez", "wilson",
        "anderson", "taylor",   "moore",    "jackson", "martin",   "lee",     "perez",
        "thompson", "white",    "harris",   "sanchez", "clark",    "ramirez", "lewis",
        "robinson", "walker",   "young",    "allen",   "king",     "wright",  "scott",
        "torres",   "nguyen",   "hill",     "flores",  "green"};
    return v;
}

const std::vector<std::string>& street_words() {
    static const std::vector<std::string> v = {
        "maple",  "oak",     "cedar",  "pine",     "elm",      "birch",   "walnut", "chestnut",
        "spruce", "willow",  "aspen",  "juniper",  "laurel",   "magnolia", "sycamore", "poplar",
        "hazel",  "linden",  "rowan",  "alder",    "hawthorn", "beech",   "holly",  "cypress"};
    return v;
}

const std::vector<std::string>& street_suffixes() {
    static const std::vector<std::string> v = {"street", "avenue", "road", "lane"};
    return v;
}

const std::vector<std::string>& cities() {
    static const std::vector<std::string> v = {
        "montreal", "toronto",  "vancouver", "ottawa",   "calgary",  "edmonton", "winnipeg",
        "quebec",   "hamilton", "kitchener", "halifax",  "victoria", "saskatoon", "regina",
        "windsor",  "oshawa",   "barrie",    "guelph",   "kingston", "sudbury",  "moncton",
        "brandon",  "nanaimo",  "kelowna"};
    return v;
}

const std::vector<std::string>& genders() {
    static const std::vector<std::string> v = {"male", "female", "other"};
    return v;
}

// Wrong-kind fillers for nonconforming injection; kept lexicon-valid so they
// never double as misspellings.
const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> v = {"pending", "unknown", "unspecified"};
    return v;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

constexpr std::size_t kNameCol = 0, kAddressCol = 1, kGenderCol = 2, kAgeCol = 3, kSalaryCol = 4;

}  // namespace

std::map<std::string, DeclaredKind> schema() {
    return {{"Name", DeclaredKind::String},
            {"Address", DeclaredKind::String},
            {"Gender", DeclaredKind::String},
            {"Age", DeclaredKind::Numeric},
            {"Salary", DeclaredKind::Numeric}};
}

nlohmann::json InjectionSpec::to_json() const {
    nlohmann::json j;
    j["missing_rate"] = missing_rate;
    j["outlier_rate"] = outlier_rate;
    j["nonconforming_rate"] = nonconforming_rate;
    j["misspell_rate"] = misspell_rate;
    j["duplicate_rate"] = duplicate_rate;
    j["duplicate_perturbation"] = duplicate_perturbation;
    j["seed"] = seed;
    return j;
}

InjectionSpec InjectionSpec::from_json(const nlohmann::json& j) {
    InjectionSpec s;
    if (j.contains("missing_rate")) s.missing_rate = j["missing_rate"].get<double>();
    if (j.contains("outlier_rate")) s.outlier_rate = j["outlier_rate"].get<double>();
    if (j.contains("nonconforming_rate"))
        s.nonconforming_rate = j["nonconforming_rate"].get<double>();
    if (j.contains("misspell_rate")) s.misspell_rate = j["misspell_rate"].get<double>();
    if (j.contains("duplicate_rate")) s.duplicate_rate = j["duplicate_rate"].get<double>();
    if (j.contains("duplicate_perturbation"))
        s.duplicate_perturbation = j["duplicate_perturbation"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<uint64_t>();
    return s;
}

Table generate_base(std::size_t n_rows, uint64_t seed, int64_t now) {
    if (n_rows < 1) fail(ErrorCode::BadConfig, "generate_base needs at least one row");
    Rng rng(seed);

    std::vector<Column> cols(5);
    cols[kNameCol].name = "Name";
    cols[kAddressCol].name = "Address";
    cols[kGenderCol].name = "Gender";
    cols[kAgeCol].name = "Age";
    cols[kAgeCol].declared_kind = DeclaredKind::Numeric;
    cols[kSalaryCol].name = "Salary";
    cols[kSalaryCol].declared_kind = DeclaredKind::Numeric;

    // fixed access counts drive the relevancy metric
    cols[kNameCol].access_count = 120;
    cols[kAddressCol].access_count = 80;
    cols[kGenderCol].access_count = 40;
    cols[kAgeCol].access_count = 100;
    cols[kSalaryCol].access_count = 160;

    std::vector<RowMeta> meta;
    meta.reserve(n_rows);
    const int64_t three_years = 3ll * 365 * 86400;
    for (std::size_t r = 0; r < n_rows; ++r) {
        cols[kNameCol].cells.push_back(
            Cell::make_text(pick(rng, first_names()) + " " + pick(rng, last_names())));
        cols[kAddressCol].cells.push_back(
            Cell::make_text(pick(rng, street_words()) + " " + pick(rng, street_suffixes()) +
                            " " + pick(rng, cities())));
        double g = rng.uniform();
        cols[kGenderCol].cells.push_back(
            Cell::make_text(g < 0.48 ? "male" : (g < 0.96 ? "female" : "other")));
        double age = std::clamp(rng.normal(40.0, 12.0), 18.0, 90.0);
        cols[kAgeCol].cells.push_back(Cell::make_number(std::round(age)));
        double salary = std::round(rng.lognormal(10.5, 0.45));
        cols[kSalaryCol].cells.push_back(Cell::make_number(salary));

        RowMeta m;
        m.created_at = now - three_years + static_cast<int64_t>(rng.below(three_years - 86400));
        m.modified_at = m.created_at + static_cast<int64_t>(rng.below(now - m.created_at + 1));
        meta.push_back(m);
    }
    return Table(std::move(cols), std::move(meta), timeparse::default_formats());
}

std::vector<std::string> domain_words() {
    std::vector<std::string> out;
    for (const auto* pool : {&first_names(), &last_names(), &street_words(), &street_suffixes(),
                             &cities(), &genders(), &filler_words()})
        out.insert(out.end(), pool->begin(), pool->end());
    return out;
}

Lexicon domain_lexicon() {
    Lexicon lex = Lexicon::bundled();
    lex.add_words(domain_words());
    return lex;
}

namespace {

std::string misspell_token(Rng& rng, const std::string& token, const Lexicon& lexicon) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::string out = token;
        int edits = 1 + static_cast<int>(rng.below(2));
        for (int e = 0; e < edits; ++e) {
            if (out.empty()) break;
            std::size_t pos = static_cast<std::size_t>(rng.below(out.size()));
            char letter = static_cast<char>('a' + rng.below(26));
            switch (rng.below(3)) {
                case 0: out[pos] = letter; break;
                case 1: out.erase(pos, 1); break;
                default: out.insert(pos, 1, letter); break;
            }
        }
        if (out.size() >= 2 && out != token && !lexicon.contains(out)) return out;
    }
    return token + "x";  // deterministic fallback, never a lexicon word
}

}  // namespace

InjectResult inject(const Table& t, const InjectionSpec& spec) {
    for (double rate : {spec.missing_rate, spec.outlier_rate, spec.nonconforming_rate,
                        spec.misspell_rate, spec.duplicate_rate})
        if (rate < 0.0 || rate > 0.5)
            fail(ErrorCode::BadConfig, "injection rates must lie in [0, 0.5]");

    Rng rng(spec.seed);
    Lexicon lexicon = domain_lexicon();
    std::size_t n = t.row_count();
    std::size_t n_cols = t.column_count();

    std::vector<std::vector<Cell>> cells(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) cells[c] = t.column(c).cells;

    GroundTruth truth;
    std::set<std::pair<std::size_t, std::size_t>> used;  // (row, col) injection sites
    std::set<std::size_t> touched_rows;

    auto reserve_site = [&](std::size_t row, std::size_t col) {
        if (!used.insert({row, col}).second) return false;
        touched_rows.insert(row);
        return true;
    };
    auto record = [&truth](std::size_t row, const std::string& col, Dimension dim,
                           std::string original) {
        truth.entries.push_back({row, col, dim, std::move(original)});
    };
    auto draw_site = [&](auto eligible, std::size_t population, const char* what) {
        // rejection sampling over (row, col); bounded retries keep RateConflict honest
        for (std::size_t attempt = 0; attempt < 64 * population + 64; ++attempt) {
            std::size_t row = static_cast<std::size_t>(rng.below(n));
            std::size_t col = static_cast<std::size_t>(rng.below(n_cols));
            if (!eligible(row, col)) continue;
            if (used.count({row, col})) continue;
            return std::make_pair(row, col);
        }
        fail(ErrorCode::RateConflict, std::string("cannot place disjoint ") + what + " sites");
        return std::make_pair(std::size_t{0}, std::size_t{0});
    };

    // ---- missing -----------------------------------------------------------
    std::size_t missing_count =
        static_cast<std::size_t>(std::llround(spec.missing_rate * static_cast<double>(n * n_cols)));
    for (std::size_t i = 0; i < missing_count; ++i) {
        auto [row, col] = draw_site(
            [&](std::size_t r, std::size_t c) { return !cells[c][r].missing(); }, n * n_cols,
            "missing");
        reserve_site(row, col);
        record(row, t.column(col).name, Dimension::Completeness, cells[col][row].content());
        cells[col][row] = Cell::make_missing("");
    }

    // ---- outliers (numeric cells, displaced at least 6 sigma) -------------
    std::vector<std::size_t> numeric_cols;
    for (std::size_t c = 0; c < n_cols; ++c)
        if (t.column(c).declared_kind == DeclaredKind::Numeric) numeric_cols.push_back(c);
    std::size_t numeric_cells = 0;
    std::map<std::size_t, std::pair<double, double>> column_stats;  // col -> mean, sd
    for (std::size_t c : numeric_cols) {
        double sum = 0.0, sq = 0.0;
        std::size_t count = 0;
        for (const auto& cell : t.column(c).cells) {
            if (cell.tag != Cell::Tag::Number) continue;
            sum += cell.num;
            sq += cell.num * cell.num;
            ++count;
        }
        numeric_cells += count;
        double mean = count ? sum / static_cast<double>(count) : 0.0;
        double var = count ? sq / static_cast<double>(count) - mean * mean : 0.0;
        column_stats[c] = {mean, std::sqrt(std::max(var, 0.0))};
    }
    std::size_t outlier_count = static_cast<std::size_t>(
        std::llround(spec.outlier_rate * static_cast<double>(numeric_cells)));
    for (std::size_t i = 0; i < outlier_count; ++i) {
        auto [row, col] = draw_site(
            [&](std::size_t r, std::size_t c) {
                return t.column(c).declared_kind == DeclaredKind::Numeric &&
                       cells[c][r].tag == Cell::Tag::Number;
            },
            numeric_cells, "outlier");
        reserve_site(row, col);
        auto [mean, sd] = column_stats[col];
        if (sd <= 0.0) sd = std::max(1.0, std::abs(mean));
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        double displaced = mean + sign * (6.0 + 4.0 * rng.uniform()) * sd;
        record(row, t.column(col).name, Dimension::Accuracy, cells[col][row].content());
        cells[col][row] = Cell::make_number(std::round(displaced * 100.0) / 100.0);
    }

    // ---- nonconforming (wrong-kind renderings) ------------------------------
    std::size_t nonconforming_count = static_cast<std::size_t>(
        std::llround(spec.nonconforming_rate * static_cast<double>(n * n_cols)));
    for (std::size_t i = 0; i < nonconforming_count; ++i) {
        auto [row, col] = draw_site(
            [&](std::size_t r, std::size_t c) { return !cells[c][r].missing(); }, n * n_cols,
            "nonconforming");
        reserve_site(row, col);
        record(row, t.column(col).name, Dimension::Conformity, cells[col][row].content());
        if (t.column(col).declared_kind == DeclaredKind::Numeric) {
            // text or date content inside a numeric column
            if (rng.uniform() < 0.25) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%02d/%04d",
                              static_cast<int>(1 + rng.below(12)),
                              static_cast<int>(2026 + rng.below(10)));
                cells[col][row] = Cell::make_text(buf);
            } else {
                cells[col][row] = Cell::make_text(pick(rng, filler_words()));
            }
        } else {
            // numeric content inside a string column
            cells[col][row] =
                Cell::make_text(std::to_string(1 + rng.below(9999)));
        }
    }

    // ---- misspellings (text cells) ------------------------------------------
    std::size_t text_cells = 0;
    for (std::size_t c = 0; c < n_cols; ++c)
        if (t.column(c).declared_kind == DeclaredKind::String) text_cells += n;
    std::size_t misspell_count = static_cast<std::size_t>(
        std::llround(spec.misspell_rate * static_cast<double>(text_cells)));
    for (std::size_t i = 0; i < misspell_count; ++i) {
        auto [row, col] = draw_site(
            [&](std::size_t r, std::size_t c) {
                return t.column(c).declared_kind == DeclaredKind::String &&
                       cells[c][r].tag == Cell::Tag::Text;
            },
            text_cells, "misspell");
        reserve_site(row, col);
        std::string original = cells[col][row].text;
        auto tokens = text::tokens(original);
        std::size_t which = static_cast<std::size_t>(rng.below(tokens.size()));
        tokens[which] = misspell_token(rng, tokens[which], lexicon);
        std::string edited;
        for (const auto& tok : tokens) {
            if (!edited.empty()) edited.push_back(' ');
            edited += tok;
        }
        record(row, t.column(col).name, Dimension::Readability, original);
        cells[col][row] = Cell::make_text(edited);
    }

    // ---- duplicates (clean source rows, perturbed, appended) ----------------
    std::size_t duplicate_count =
        static_cast<std::size_t>(std::llround(spec.duplicate_rate * static_cast<double>(n)));
    std::vector<std::vector<Cell>> appended;
    std::vector<RowMeta> appended_meta;
    std::set<std::size_t> used_sources;
    for (std::size_t i = 0; i < duplicate_count; ++i) {
        std::size_t source = n;
        for (std::size_t attempt = 0; attempt < 64 * n + 64; ++attempt) {
            std::size_t candidate = static_cast<std::size_t>(rng.below(n));
            if (touched_rows.count(candidate) || used_sources.count(candidate)) continue;
            source = candidate;
            break;
        }
        if (source == n)
            fail(ErrorCode::RateConflict, "not enough clean rows for duplicate injection");
        used_sources.insert(source);

        std::vector<Cell> dup(n_cols);
        for (std::size_t c = 0; c < n_cols; ++c) dup[c] = cells[c][source];
        std::size_t new_row = n + appended.size();
        truth.duplicate_map[new_row] = source;

        // perturb up to duplicate_perturbation distinct fields: one token of a
        // text field swaps to a token drawn from another row of the same
        // column (stays in-domain), numeric fields jitter slightly
        std::set<std::size_t> edited_fields;
        int edits = std::min<int>(spec.duplicate_perturbation, static_cast<int>(n_cols));
        while (static_cast<int>(edited_fields.size()) < edits) {
            std::size_t c = static_cast<std::size_t>(rng.below(n_cols));
            if (!edited_fields.insert(c).second) continue;
            std::string original = dup[c].content();
            if (dup[c].tag == Cell::Tag::Number) {
                double jitter = 1.0 + (rng.uniform() - 0.5) * 0.04;
                dup[c] = Cell::make_number(std::round(dup[c].num * jitter));
            } else if (dup[c].tag == Cell::Tag::Text) {
                std::size_t donor = source;
                for (int attempt = 0; attempt < 32; ++attempt) {
                    std::size_t candidate = static_cast<std::size_t>(rng.below(n));
                    if (touched_rows.count(candidate)) continue;  // keep donors clean
                    if (cells[c][candidate].tag != Cell::Tag::Text) continue;
                    donor = candidate;
                    break;
                }
                auto donor_toks = text::tokens(cells[c][donor].content());
                auto toks = text::tokens(dup[c].text);
                if (!donor_toks.empty() && !toks.empty()) {
                    std::size_t which = static_cast<std::size_t>(rng.below(toks.size()));
                    toks[which] = donor_toks[std::min(which, donor_toks.size() - 1)];
                    std::string rebuilt;
                    for (const auto& tok : toks) {
                        if (!rebuilt.empty()) rebuilt.push_back(' ');
                        rebuilt += tok;
                    }
                    dup[c] = Cell::make_text(rebuilt);
                }
            }
            if (dup[c].content() != original)
                record(new_row, t.column(c).name, Dimension::Consistency, original);
        }
        appended.push_back(std::move(dup));
        if (t.has_row_meta()) appended_meta.push_back(t.row_meta()[source]);
    }

    std::vector<Column> cols = t.columns();
    for (std::size_t c = 0; c < n_cols; ++c) {
        cols[c].cells = std::move(cells[c]);
        for (const auto& row : appended) cols[c].cells.push_back(row[c]);
    }
    std::vector<RowMeta> meta = t.row_meta();
    meta.insert(meta.end(), appended_meta.begin(), appended_meta.end());

    InjectResult result{Table(std::move(cols), std::move(meta), t.date_formats()),
                        std::move(truth)};
    return result;
}

}  // namespace dq::synth
