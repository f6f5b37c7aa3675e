#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mhquant/stats/data_matrix.hpp"
#include "mhquant/stats/logistic.hpp"
#include "mhquant/stats/roc.hpp"
#include "mhquant/stats/split.hpp"

namespace mhquant::stats {

/// Column names of the dynamic recovery-rate block in a design matrix:
/// per-lesion weighted rate plus its censoring indicator.
inline const std::vector<std::string>& dynamic_parameter_columns() {
    static const std::vector<std::string> cols = {
        "rr_hole_w", "rr_hole_censored", "rr_cyst_w", "rr_cyst_censored",
        "rr_elm_w",  "rr_elm_censored",  "rr_ez_w",   "rr_ez_censored",
    };
    return cols;
}

struct CompareOptions {
    double test_fraction = 0.2;  ///< 0 disables the split: evaluate in-sample
    std::uint64_t seed = 1;
    double threshold = 0.5;
    IrlsOptions irls;
};

struct ModelEval {
    LogisticFit fit;                   ///< trained on the train side
    double auc = 0.0;                  ///< on the evaluation side
    ConfusionMetrics confusion;        ///< at opt.threshold
    std::vector<double> scores;        ///< evaluation-side predicted probabilities
    std::vector<int> labels;           ///< evaluation-side outcomes
    std::vector<std::string> columns;  ///< covariates the model used
};

struct DpComparison {
    ModelEval with_dp;
    ModelEval without_dp;
    std::vector<std::string> dp_columns_present;
    double lr_stat = 0.0;  ///< 2 (ll_with - ll_without), training log-likelihoods
    int lr_df = 0;
    double lr_p = 1.0;
};

namespace detail {

inline ModelEval eval_model(const DataMatrix& m, const std::vector<std::size_t>& train,
                            const std::vector<std::size_t>& eval_rows,
                            const CompareOptions& opt) {
    auto dense = m.dense();
    auto y = m.outcome_binary();

    std::vector<std::vector<double>> x_train;
    std::vector<int> y_train;
    for (auto i : train) {
        x_train.push_back(dense[i]);
        y_train.push_back(y[i]);
    }

    ModelEval ev;
    ev.columns = m.columns;
    ev.fit = fit_logistic(x_train, y_train, m.columns, opt.irls);
    for (auto i : eval_rows) {
        ev.scores.push_back(predict_prob(ev.fit, dense[i]));
        ev.labels.push_back(y[i]);
    }
    ev.auc = roc_auc(ev.scores, ev.labels);
    ev.confusion = confusion_at(ev.scores, ev.labels, opt.threshold);
    return ev;
}

}  // namespace detail

/// Nested-model comparison: the full matrix against the same matrix with the
/// dynamic recovery-rate block removed. Both models share one train/test
/// split so their evaluation metrics are head-to-head; the likelihood-ratio
/// test compares training-side log-likelihoods (the models are nested, df =
/// number of dynamic columns actually present). With test_fraction = 0 the
/// whole matrix serves as both sides.
inline DpComparison compare_with_without_dp(
    const DataMatrix& m, const CompareOptions& opt = {},
    const std::vector<std::string>& dp_cols = dynamic_parameter_columns()) {
    if (!m.complete()) throw Error("compare_with_without_dp requires a complete matrix");

    DpComparison cmp;
    for (const auto& c : dp_cols)
        if (std::find(m.columns.begin(), m.columns.end(), c) != m.columns.end())
            cmp.dp_columns_present.push_back(c);
    if (cmp.dp_columns_present.empty())
        throw Error("compare_with_without_dp: no dynamic columns in the matrix");
    DataMatrix reduced = m.without_columns(cmp.dp_columns_present);
    if (reduced.n_cols() == 0)
        throw Error("compare_with_without_dp: nothing left without the dynamic columns");

    const auto y = m.outcome_binary();
    std::vector<std::size_t> train, eval_rows;
    if (opt.test_fraction == 0.0) {
        for (std::size_t i = 0; i < y.size(); ++i) train.push_back(i);
        eval_rows = train;
    } else {
        auto split = stratified_split(y, opt.test_fraction, opt.seed);
        train = split.train;
        eval_rows = split.test;
    }

    cmp.with_dp = detail::eval_model(m, train, eval_rows, opt);
    cmp.without_dp = detail::eval_model(reduced, train, eval_rows, opt);

    cmp.lr_df = static_cast<int>(cmp.dp_columns_present.size());
    cmp.lr_stat = std::max(0.0, 2.0 * (cmp.with_dp.fit.loglik - cmp.without_dp.fit.loglik));
    cmp.lr_p = chi2_sf(cmp.lr_stat, cmp.lr_df);
    return cmp;
}

}  // namespace mhquant::stats
