#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mhquant/core/records.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::stats {

/// Rectangular table of named numeric covariates with per-cell missingness,
/// optionally carrying one binary outcome per row. This is the hand-off
/// format between feature extraction and the statistical protocol.
struct DataMatrix {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;  ///< rows[i].size() == columns.size()
    std::vector<std::optional<core::OutcomeLabel>> outcomes;  ///< empty, or one per row
    std::vector<std::string> row_ids;  ///< optional row labels (eye ids)

    int n_rows() const { return static_cast<int>(rows.size()); }
    int n_cols() const { return static_cast<int>(columns.size()); }

    int col(const std::string& name) const {
        auto it = std::find(columns.begin(), columns.end(), name);
        return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
    }

    bool complete() const {
        for (const auto& r : rows)
            for (const auto& c : r)
                if (!c) return false;
        return true;
    }

    /// Values of one column; requires the column to have no missing cells.
    std::vector<double> column_values(int j) const {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) {
            if (!r[j]) throw Error("column_values on column with missing cells: " + columns[j]);
            v.push_back(*r[j]);
        }
        return v;
    }

    /// Copy without the named columns (names not present are ignored).
    DataMatrix without_columns(const std::vector<std::string>& names) const {
        DataMatrix out;
        out.outcomes = outcomes;
        out.row_ids = row_ids;
        std::vector<int> keep;
        for (int j = 0; j < n_cols(); ++j)
            if (std::find(names.begin(), names.end(), columns[j]) == names.end()) {
                keep.push_back(j);
                out.columns.push_back(columns[j]);
            }
        out.rows.reserve(rows.size());
        for (const auto& r : rows) {
            std::vector<std::optional<double>> nr;
            nr.reserve(keep.size());
            for (int j : keep) nr.push_back(r[j]);
            out.rows.push_back(std::move(nr));
        }
        return out;
    }

    /// Binary outcome vector (Superior = 1); requires outcomes for all rows.
    std::vector<int> outcome_binary() const {
        if (outcomes.size() != rows.size())
            throw Error("outcome_binary: outcomes not aligned with rows");
        std::vector<int> y;
        y.reserve(outcomes.size());
        for (const auto& o : outcomes) {
            if (!o) throw Error("outcome_binary: missing outcome (clean the matrix first)");
            y.push_back(o->value == core::Outcome::Superior ? 1 : 0);
        }
        return y;
    }

    /// Dense covariate matrix; requires completeness.
    std::vector<std::vector<double>> dense() const {
        std::vector<std::vector<double>> X;
        X.reserve(rows.size());
        for (const auto& r : rows) {
            std::vector<double> xr;
            xr.reserve(r.size());
            for (const auto& c : r) {
                if (!c) throw Error("dense() on a matrix with missing cells");
                xr.push_back(*c);
            }
            X.push_back(std::move(xr));
        }
        return X;
    }
};

struct ImputedColumn {
    std::string column;
    double fraction_missing = 0.0;
    double imputed_value = 0.0;
    int n_imputed = 0;
};

struct DroppedColumn {
    std::string column;
    double fraction_missing = 0.0;
};

struct CleaningReport {
    int dropped_outcome_rows = 0;
    std::vector<ImputedColumn> imputed;
    std::vector<DroppedColumn> dropped_columns;
};

/// Missing-data policy: rows without an outcome are unusable and dropped
/// first; then each covariate column is either mean-imputed (when under
/// `missing_threshold` missing) or dropped entirely (at or above it). The
/// report records every imputation and drop so it can be surfaced verbatim.
inline std::pair<DataMatrix, CleaningReport> clean(const DataMatrix& m,
                                                   double missing_threshold = 0.10) {
    if (m.n_rows() == 0) throw EmptyInputError("clean: no rows");
    CleaningReport report;
    DataMatrix kept;
    kept.columns = m.columns;

    const bool has_outcomes = !m.outcomes.empty();
    for (int i = 0; i < m.n_rows(); ++i) {
        if (has_outcomes && !m.outcomes[i]) {
            ++report.dropped_outcome_rows;
            continue;
        }
        kept.rows.push_back(m.rows[i]);
        if (has_outcomes) kept.outcomes.push_back(m.outcomes[i]);
        if (!m.row_ids.empty()) kept.row_ids.push_back(m.row_ids[i]);
    }
    const int n = kept.n_rows();
    if (n == 0) throw EmptyInputError("clean: every row lacks an outcome");

    std::vector<int> keep_cols;
    for (int j = 0; j < kept.n_cols(); ++j) {
        int missing = 0;
        double sum = 0.0;
        for (const auto& r : kept.rows) {
            if (r[j])
                sum += *r[j];
            else
                ++missing;
        }
        const double frac = static_cast<double>(missing) / n;
        if (frac >= missing_threshold) {
            report.dropped_columns.push_back({kept.columns[j], frac});
            continue;
        }
        keep_cols.push_back(j);
        if (missing > 0) {
            const double mean = sum / (n - missing);
            for (auto& r : kept.rows)
                if (!r[j]) r[j] = mean;
            report.imputed.push_back({kept.columns[j], frac, mean, missing});
        }
    }
    if (keep_cols.empty() && kept.n_cols() > 0) throw AllColumnsDroppedError();

    DataMatrix out;
    out.outcomes = std::move(kept.outcomes);
    out.row_ids = std::move(kept.row_ids);
    for (int j : keep_cols) out.columns.push_back(kept.columns[j]);
    out.rows.reserve(kept.rows.size());
    for (const auto& r : kept.rows) {
        std::vector<std::optional<double>> nr;
        nr.reserve(keep_cols.size());
        for (int j : keep_cols) nr.push_back(r[j]);
        out.rows.push_back(std::move(nr));
    }
    return {std::move(out), std::move(report)};
}

}  // namespace mhquant::stats
