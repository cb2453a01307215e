#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dq/lexicon.hpp"
#include "dq/table.hpp"
#include "dq/truth.hpp"

namespace dq::synth {

/// Fixed evaluation timestamp for reproducible runs: 2026-01-01T00:00:00Z.
inline constexpr int64_t kDefaultNow = 1767225600;

struct InjectionSpec {
    double missing_rate = 0.01;        // of all cells
    double outlier_rate = 0.01;        // of numeric cells
    double nonconforming_rate = 0.01;  // of all cells
    double misspell_rate = 0.01;       // of text cells
    double duplicate_rate = 0.005;     // of rows, appended as near-duplicates
    int duplicate_perturbation = 2;    // field edits per duplicate
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static InjectionSpec from_json(const nlohmann::json& j);
};

/// Person-records schema: Name, Address, Gender (string); Age, Salary
/// (numeric). Ages are normal(40,12) clipped to [18,90]; salaries log-normal.
/// Row timestamps satisfy created <= modified <= now.
Table generate_base(std::size_t n_rows, uint64_t seed, int64_t now = kDefaultNow);

std::map<std::string, DeclaredKind> schema();

struct InjectResult {
    Table table;
    GroundTruth truth;
};

/// Plants labeled anomalies. Sites are disjoint across dimensions within a
/// cell; duplicate sources are drawn from rows untouched by cell injections.
InjectResult inject(const Table& t, const InjectionSpec& spec);

/// Generator vocabulary (names, streets, cities, genders, filler tokens);
/// readability checks on synthetic data treat exactly these as valid.
std::vector<std::string> domain_words();

Lexicon domain_lexicon();

}  // namespace dq::synth
