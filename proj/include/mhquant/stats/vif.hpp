#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/data_matrix.hpp"
#include "mhquant/stats/linalg.hpp"

namespace mhquant::stats {

struct VifEntry {
    std::string column;
    double vif = 1.0;  ///< +infinity flags exact collinearity
};

namespace detail {

/// R^2 of regressing column j on an intercept plus all other columns.
/// Exact collinearity (singular normal equations or zero target variance)
/// reports R^2 = 1 so the caller sees VIF = infinity rather than an error.
inline double r_squared_on_others(const std::vector<std::vector<double>>& X, int j) {
    const int n = static_cast<int>(X.size());
    const int p = static_cast<int>(X[0].size());  // includes column j
    const int k = p;                              // intercept + (p-1) others

    Matrix xtx(k, k);
    std::vector<double> xty(k, 0.0);
    auto feat = [&](const std::vector<double>& row, int idx) {
        if (idx == 0) return 1.0;
        const int c = idx - 1 < j ? idx - 1 : idx;  // skip column j
        return row[c];
    };
    double sy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = X[i][j];
        sy += y;
        syy += y * y;
        for (int r = 0; r < k; ++r) {
            const double fr = feat(X[i], r);
            xty[r] += fr * y;
            for (int c = r; c < k; ++c) xtx(r, c) += fr * feat(X[i], c);
        }
    }
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < r; ++c) xtx(r, c) = xtx(c, r);

    const double sst = syy - sy * sy / n;
    if (!(sst > 0.0)) return 1.0;  // constant column: collinear with intercept

    auto beta = solve(xtx, xty);
    if (!beta) return 1.0;

    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
        double fitv = 0.0;
        for (int r = 0; r < k; ++r) fitv += (*beta)[r] * feat(X[i], r);
        const double e = X[i][j] - fitv;
        sse += e * e;
    }
    return 1.0 - sse / sst;
}

}  // namespace detail

/// Variance inflation factors for every column of a complete matrix.
/// VIF_j = 1 / (1 - R_j^2); exact collinearity yields +infinity.
inline std::vector<VifEntry> vif_all(const DataMatrix& m) {
    if (m.n_cols() < 2) throw InsufficientDataError("VIF needs at least two columns");
    if (m.n_rows() <= m.n_cols())
        throw InsufficientDataError("VIF needs more rows than columns");
    if (!m.complete()) throw Error("VIF requires a complete matrix (clean first)");

    const auto X = m.dense();
    std::vector<VifEntry> out;
    out.reserve(m.n_cols());
    for (int j = 0; j < m.n_cols(); ++j) {
        const double r2 = detail::r_squared_on_others(X, j);
        VifEntry e{m.columns[j], 0.0};
        e.vif = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity()
                                  : 1.0 / (1.0 - r2);
        out.push_back(std::move(e));
    }
    return out;
}

struct VifElimination {
    std::vector<std::vector<VifEntry>> rounds;  ///< VIF table before each removal
    std::vector<std::string> removed;           ///< removal order
    std::vector<VifEntry> final_vifs;           ///< all <= limit (or < 2 columns left)
    DataMatrix reduced;
};

/// Greedy multicollinearity screen: recompute VIFs, drop the worst column
/// while any exceeds `limit`, repeat. Infinite VIFs (exact collinearity) are
/// removed first by construction; ties keep the earlier column.
inline VifElimination vif_eliminate(const DataMatrix& m, double limit = 5.0) {
    VifElimination out;
    out.reduced = m;
    while (out.reduced.n_cols() >= 2) {
        auto vifs = vif_all(out.reduced);
        int worst = -1;
        for (int j = 0; j < static_cast<int>(vifs.size()); ++j)
            if (vifs[j].vif > limit && (worst < 0 || vifs[j].vif > vifs[worst].vif))
                worst = j;
        if (worst < 0) {
            out.final_vifs = std::move(vifs);
            return out;
        }
        out.rounds.push_back(vifs);
        out.removed.push_back(vifs[worst].column);
        out.reduced = out.reduced.without_columns({vifs[worst].column});
    }
    // 0 or 1 columns left: VIF is vacuously fine.
    if (out.reduced.n_cols() == 1) out.final_vifs = {{out.reduced.columns[0], 1.0}};
    return out;
}

}  // namespace mhquant::stats
