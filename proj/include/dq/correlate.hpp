#pragma once

#include <string>
#include <vector>

#include "dq/table.hpp"

namespace dq::correlate {

double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Correlation ratio (eta) of a numeric variable grouped by a categorical one.
double correlation_ratio(const std::vector<std::string>& categories,
                         const std::vector<double>& values);

double cramers_v(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Association strength in [0,1] between two columns, picking Pearson,
/// correlation ratio, or Cramér's V by column kinds. Missing cells and
/// nonconforming content are skipped pairwise.
double association(const Table& t, std::size_t col_a, std::size_t col_b);

}  // namespace dq::correlate
