#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/data_matrix.hpp"
#include "mhquant/stats/linalg.hpp"
#include "mhquant/stats/special_functions.hpp"

namespace mhquant::stats {

struct IrlsOptions {
    int max_iter = 50;
    double tol = 1e-8;               ///< convergence: max |delta B| below this
    double separation_bound = 15.0;  ///< |B| beyond this suggests separation
    double wald_z = 1.96;            ///< CI half-width multiplier in logit space
};

/// One fitted term: coefficient with its Wald machinery and odds-ratio view.
struct LogisticTerm {
    std::string name;
    double b = 0.0;
    double se = 0.0;
    double wald = 0.0;        ///< (b / se)^2
    double p = 1.0;           ///< chi-squared(1) upper tail of the Wald statistic
    double odds_ratio = 1.0;  ///< exp(b)
    double ci_low = 0.0;      ///< exp(b - z se)
    double ci_high = 0.0;     ///< exp(b + z se)
};

struct LogisticFit {
    LogisticTerm intercept;
    std::vector<LogisticTerm> terms;
    double loglik = 0.0;
    double loglik_null = 0.0;
    double nagelkerke_r2 = 0.0;
    int n = 0;
    int iterations = 0;
    bool converged = true;
    bool separation_suspected = false;
};

inline double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

namespace detail {

inline double log1pexp(double eta) {
    // log(1 + e^eta) without overflow on either side.
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

inline void finish_term(LogisticTerm& t, double z) {
    t.wald = t.se > 0.0 ? (t.b / t.se) * (t.b / t.se) : 0.0;
    t.p = t.se > 0.0 ? chi2_sf(t.wald, 1) : 1.0;
    t.odds_ratio = std::exp(t.b);
    t.ci_low = std::exp(t.b - z * t.se);
    t.ci_high = std::exp(t.b + z * t.se);
}

}  // namespace detail

/// Maximum-likelihood logistic regression via iteratively reweighted least
/// squares (equivalently Newton-Raphson on the log-likelihood), starting from
/// B = 0. X is n rows by p covariates; the intercept is added internally.
///
/// The null model (intercept only) has the closed-form solution
/// B0 = logit(mean(y)), which this code uses both for loglik_null and for the
/// p = 0 case — that makes Nagelkerke's R^2 exactly 0 for an empty model.
///
/// Complete separation cannot converge (coefficients drift to infinity); when
/// a coefficient magnitude passes `separation_bound` the fit stops and is
/// returned with converged = false and separation_suspected = true rather
/// than throwing, so screening loops can keep the partial result.
inline LogisticFit fit_logistic(const std::vector<std::vector<double>>& X,
                                const std::vector<int>& y,
                                const std::vector<std::string>& names,
                                const IrlsOptions& opt = {}) {
    const int n = static_cast<int>(y.size());
    const int p = static_cast<int>(names.size());
    if (static_cast<int>(X.size()) != n)
        throw ShapeMismatchError("fit_logistic: X rows vs y length");
    for (const auto& r : X)
        if (static_cast<int>(r.size()) != p)
            throw ShapeMismatchError("fit_logistic: X row width vs names");
    if (n <= p + 1)
        throw InsufficientDataError("fit_logistic needs n > p + 1");

    int n_pos = 0;
    for (int v : y) n_pos += v;
    if (n_pos == 0 || n_pos == n) throw OneClassOnlyError();

    LogisticFit fit;
    fit.n = n;

    // Closed-form null model.
    const double ybar = static_cast<double>(n_pos) / n;
    const double b0_null = std::log(ybar / (1.0 - ybar));
    fit.loglik_null = n * (ybar * std::log(ybar) + (1.0 - ybar) * std::log(1.0 - ybar));

    const int k = p + 1;  // intercept + covariates
    std::vector<double> B(k, 0.0);

    if (p == 0) {
        B[0] = b0_null;
        fit.loglik = fit.loglik_null;
        fit.intercept.name = "(intercept)";
        fit.intercept.b = B[0];
        fit.intercept.se = 1.0 / std::sqrt(n * ybar * (1.0 - ybar));
        detail::finish_term(fit.intercept, opt.wald_z);
        fit.nagelkerke_r2 = 0.0;
        fit.iterations = 0;
        return fit;
    }

    auto eta_of = [&](int i) {
        double e = B[0];
        for (int j = 0; j < p; ++j) e += B[j + 1] * X[i][j];
        return e;
    };

    Matrix info(k, k);
    std::vector<double> mu(n), grad(k);
    fit.converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
        fit.iterations = it;
        for (int i = 0; i < n; ++i) mu[i] = sigmoid(eta_of(i));

        std::fill(grad.begin(), grad.end(), 0.0);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) info(r, c) = 0.0;
        for (int i = 0; i < n; ++i) {
            const double resid = y[i] - mu[i];
            const double w = mu[i] * (1.0 - mu[i]);
            grad[0] += resid;
            for (int j = 0; j < p; ++j) grad[j + 1] += resid * X[i][j];
            // Information matrix X^T W X over the augmented design.
            info(0, 0) += w;
            for (int r = 0; r < p; ++r) {
                info(0, r + 1) += w * X[i][r];
                for (int c = r; c < p; ++c) info(r + 1, c + 1) += w * X[i][r] * X[i][c];
            }
        }
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < r; ++c) info(r, c) = info(c, r);

        auto delta = solve(info, grad);
        if (!delta)
            throw RankDeficientError("singular information matrix in IRLS iteration " +
                                     std::to_string(it));
        double max_step = 0.0, max_b = 0.0;
        for (int j = 0; j < k; ++j) {
            B[j] += (*delta)[j];
            max_step = std::max(max_step, std::abs((*delta)[j]));
            max_b = std::max(max_b, std::abs(B[j]));
        }
        if (max_step < opt.tol) {
            fit.converged = true;
            break;
        }
        if (max_b > opt.separation_bound) {
            fit.separation_suspected = true;
            break;
        }
    }

    // Standard errors from the observed information at the final estimate.
    for (int i = 0; i < n; ++i) mu[i] = sigmoid(eta_of(i));
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) info(r, c) = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = mu[i] * (1.0 - mu[i]);
        info(0, 0) += w;
        for (int r = 0; r < p; ++r) {
            info(0, r + 1) += w * X[i][r];
            for (int c = r; c < p; ++c) info(r + 1, c + 1) += w * X[i][r] * X[i][c];
        }
    }
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < r; ++c) info(r, c) = info(c, r);
    auto cov = invert(info);
    if (!cov) throw RankDeficientError("singular information matrix at the optimum");

    fit.loglik = 0.0;
    for (int i = 0; i < n; ++i) {
        const double eta = eta_of(i);
        fit.loglik += y[i] * eta - detail::log1pexp(eta);
    }
    const double num = 1.0 - std::exp(2.0 * (fit.loglik_null - fit.loglik) / n);
    const double den = 1.0 - std::exp(2.0 * fit.loglik_null / n);
    fit.nagelkerke_r2 = den != 0.0 ? num / den : 0.0;

    fit.intercept.name = "(intercept)";
    fit.intercept.b = B[0];
    fit.intercept.se = std::sqrt((*cov)(0, 0));
    detail::finish_term(fit.intercept, opt.wald_z);
    fit.terms.resize(p);
    for (int j = 0; j < p; ++j) {
        fit.terms[j].name = names[j];
        fit.terms[j].b = B[j + 1];
        fit.terms[j].se = std::sqrt((*cov)(j + 1, j + 1));
        detail::finish_term(fit.terms[j], opt.wald_z);
    }
    return fit;
}

/// Predicted probability for a covariate row ordered like fit.terms.
inline double predict_prob(const LogisticFit& fit, const std::vector<double>& x) {
    if (x.size() != fit.terms.size())
        throw ShapeMismatchError("predict_prob: covariate count mismatch");
    double eta = fit.intercept.b;
    for (std::size_t j = 0; j < x.size(); ++j) eta += fit.terms[j].b * x[j];
    return sigmoid(eta);
}

struct ScreenEntry {
    std::string column;
    double b = 0.0, se = 0.0, p = 1.0;
    bool converged = true;
    bool skipped = false;
    std::string note;
};

struct ScreenResult {
    std::vector<ScreenEntry> entries;
    std::vector<std::string> selected;  ///< columns with p < alpha
};

/// Univariate outcome screen: one single-covariate logistic fit per column,
/// keeping columns whose Wald p-value clears `alpha`. Non-converged
/// (separated) fits stay in the running with a warning note — separation
/// means the column predicts *too* well, which is the opposite of a reason
/// to discard it at the screening step. Unfittable columns are skipped.
inline ScreenResult univariate_screen(const DataMatrix& m, double alpha = 0.10,
                                      const IrlsOptions& opt = {}) {
    if (!m.complete()) throw Error("univariate_screen requires a complete matrix");
    const auto y = m.outcome_binary();
    ScreenResult out;
    for (int j = 0; j < m.n_cols(); ++j) {
        ScreenEntry e;
        e.column = m.columns[j];
        std::vector<std::vector<double>> xj;
        xj.reserve(y.size());
        for (const auto& r : m.rows) xj.push_back({*r[j]});
        try {
            LogisticFit f = fit_logistic(xj, y, {m.columns[j]}, opt);
            e.b = f.terms[0].b;
            e.se = f.terms[0].se;
            e.p = f.terms[0].p;
            e.converged = f.converged;
            if (f.separation_suspected) e.note = "separation suspected; kept with caution";
            if (e.p < alpha) out.selected.push_back(e.column);
        } catch (const Error& err) {
            e.skipped = true;
            e.note = err.what();
        }
        out.entries.push_back(std::move(e));
    }
    return out;
}

}  // namespace mhquant::stats
