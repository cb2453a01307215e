#include "dq/correlate.hpp"

#include <cmath>
#include <map>

namespace dq::correlate {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = std::min(x.size(), y.size());
    if (n < 3) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double correlation_ratio(const std::vector<std::string>& categories,
                         const std::vector<double>& values) {
    std::size_t n = std::min(categories.size(), values.size());
    if (n < 3) return 0.0;
    std::map<std::string, std::pair<double, std::size_t>> groups;  // sum, count
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& g = groups[categories[i]];
        g.first += values[i];
        g.second += 1;
        total += values[i];
    }
    double grand_mean = total / static_cast<double>(n);
    double ss_between = 0.0;
    for (const auto& [cat, g] : groups) {
        double mean = g.first / static_cast<double>(g.second);
        ss_between += static_cast<double>(g.second) * (mean - grand_mean) * (mean - grand_mean);
    }
    double ss_total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        ss_total += (values[i] - grand_mean) * (values[i] - grand_mean);
    if (ss_total <= 0.0) return 0.0;
    return std::sqrt(ss_between / ss_total);
}

double cramers_v(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t n = std::min(a.size(), b.size());
    if (n < 3) return 0.0;
    std::map<std::string, std::size_t> row_ids, col_ids;
    std::vector<std::size_t> ra(n), cb(n);
    for (std::size_t i = 0; i < n; ++i) {
        ra[i] = row_ids.emplace(a[i], row_ids.size()).first->second;
        cb[i] = col_ids.emplace(b[i], col_ids.size()).first->second;
    }
    if (row_ids.size() < 2 || col_ids.size() < 2) return 0.0;
    std::vector<std::size_t> row_marginal(row_ids.size(), 0), col_marginal(col_ids.size(), 0);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
    for (std::size_t i = 0; i < n; ++i) {
        ++row_marginal[ra[i]];
        ++col_marginal[cb[i]];
        ++joint[{ra[i], cb[i]}];
    }
    // chi2 over observed cells; unobserved cells contribute their expected
    // counts, which sum to n minus the observed cells' expectations
    double chi2 = 0.0;
    double expected_observed = 0.0;
    for (const auto& [cell, count] : joint) {
        double expected = static_cast<double>(row_marginal[cell.first]) *
                          static_cast<double>(col_marginal[cell.second]) /
                          static_cast<double>(n);
        double observed = static_cast<double>(count);
        chi2 += (observed - expected) * (observed - expected) / expected;
        expected_observed += expected;
    }
    chi2 += static_cast<double>(n) - expected_observed;
    std::size_t k = std::min(row_ids.size(), col_ids.size()) - 1;
    return std::sqrt(std::max(0.0, chi2) / (static_cast<double>(n) * static_cast<double>(k)));
}

namespace {

bool numeric_kind(const Column& c) { return c.declared_kind != DeclaredKind::String; }

double numeric_content(const Cell& cell, bool* ok) {
    *ok = true;
    if (cell.tag == Cell::Tag::Number) return cell.num;
    if (cell.tag == Cell::Tag::Timestamp) return static_cast<double>(cell.ts) / 86400.0;
    *ok = false;
    return 0.0;
}

}  // namespace

double association(const Table& t, std::size_t col_a, std::size_t col_b) {
    const Column& a = t.column(col_a);
    const Column& b = t.column(col_b);
    bool a_num = numeric_kind(a), b_num = numeric_kind(b);
    if (a_num && b_num) {
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            bool ok_a, ok_b;
            double va = numeric_content(a.cells[r], &ok_a);
            double vb = numeric_content(b.cells[r], &ok_b);
            if (ok_a && ok_b) {
                xs.push_back(va);
                ys.push_back(vb);
            }
        }
        return std::abs(pearson(xs, ys));
    }
    if (a_num != b_num) {
        const Column& cat = a_num ? b : a;
        const Column& num = a_num ? a : b;
        std::vector<std::string> cs;
        std::vector<double> vs;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            bool ok;
            double v = numeric_content(num.cells[r], &ok);
            if (!ok || cat.cells[r].missing()) continue;
            cs.push_back(cat.cells[r].content());
            vs.push_back(v);
        }
        return correlation_ratio(cs, vs);
    }
    std::vector<std::string> xs, ys;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (a.cells[r].missing() || b.cells[r].missing()) continue;
        xs.push_back(a.cells[r].content());
        ys.push_back(b.cells[r].content());
    }
    return cramers_v(xs, ys);
}

}  // namespace dq::correlate
