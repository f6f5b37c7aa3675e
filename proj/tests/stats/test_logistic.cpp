#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/compare.hpp"
#include "mhquant/stats/logistic.hpp"
#include "mhquant/stats/roc.hpp"
#include "mhquant/stats/split.hpp"
#include "reference/stat_reference.hpp"
#include "support/test_rng.hpp"

using namespace mhquant;
using namespace mhquant::stats;
using Catch::Approx;

namespace {

std::vector<std::string> covariate_names(int p) {
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

}  // namespace

// ---------------------------------------------------------------------------
// Maximum-likelihood fit against a reference implementation

TEST_CASE("logistic fit matches reference Newton fits on 20 seeded datasets") {
    for (const auto& c : mhq_test_ref::kLogisticCases) {
        auto d = mhq_test::logistic_dataset(c.n, c.p, c.seed);
        auto fit = fit_logistic(d.X, d.y, covariate_names(c.p));
        INFO("p=" << c.p << " seed=" << c.seed);
        REQUIRE(fit.converged);
        CHECK_FALSE(fit.separation_suspected);
        CHECK(fit.intercept.b == Approx(c.intercept).margin(1e-6));
        CHECK(fit.intercept.se == Approx(c.se_intercept).margin(1e-6));
        for (int j = 0; j < c.p; ++j) {
            CHECK(fit.terms[j].b == Approx(c.coef[j]).margin(1e-6));
            CHECK(fit.terms[j].se == Approx(c.se[j]).margin(1e-6));
        }
        CHECK(fit.loglik == Approx(c.loglik).margin(1e-6));
        CHECK(fit.loglik_null == Approx(c.loglik_null).margin(1e-8));
        CHECK(fit.nagelkerke_r2 == Approx(c.nagelkerke).margin(1e-8));
    }
}

TEST_CASE("wald machinery is consistent with the coefficient table") {
    auto d = mhq_test::logistic_dataset(200, 3, 2002);
    auto fit = fit_logistic(d.X, d.y, covariate_names(3));
    for (const auto& t : fit.terms) {
        CHECK(t.wald == Approx((t.b / t.se) * (t.b / t.se)).epsilon(1e-14));
        CHECK(t.p == chi2_sf(t.wald, 1));
        CHECK(t.odds_ratio == Approx(std::exp(t.b)).epsilon(1e-14));
        CHECK(t.ci_low == Approx(std::exp(t.b - 1.96 * t.se)).epsilon(1e-14));
        CHECK(t.ci_high == Approx(std::exp(t.b + 1.96 * t.se)).epsilon(1e-14));
        CHECK(t.ci_low < t.odds_ratio);
        CHECK(t.odds_ratio < t.ci_high);
    }
}

TEST_CASE("intercept-only fit has the closed-form solution") {
    std::vector<std::vector<double>> X(10);  // ten empty rows
    std::vector<int> y = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};  // ybar = 0.3
    auto fit = fit_logistic(X, y, {});
    CHECK(fit.intercept.b == Approx(std::log(0.3 / 0.7)).epsilon(1e-14));
    CHECK(fit.intercept.se == Approx(1.0 / std::sqrt(10 * 0.3 * 0.7)).epsilon(1e-14));
    CHECK(fit.loglik == fit.loglik_null);
    CHECK(fit.nagelkerke_r2 == 0.0);
}

TEST_CASE("logistic fit guards") {
    SECTION("single-class outcomes") {
        std::vector<std::vector<double>> X = {{0.1}, {0.2}, {0.3}, {0.4}};
        CHECK_THROWS_AS(fit_logistic(X, {1, 1, 1, 1}, {"x"}), OneClassOnlyError);
        CHECK_THROWS_AS(fit_logistic(X, {0, 0, 0, 0}, {"x"}), OneClassOnlyError);
    }
    SECTION("shape mismatches") {
        std::vector<std::vector<double>> X = {{0.1}, {0.2}};
        CHECK_THROWS_AS(fit_logistic(X, {1, 0, 1}, {"x"}), ShapeMismatchError);
        std::vector<std::vector<double>> Xw = {{0.1, 0.2}, {0.2, 0.3}, {0.3, 0.1}, {0.4, 0.0}};
        CHECK_THROWS_AS(fit_logistic(Xw, {1, 0, 1, 0}, {"x"}), ShapeMismatchError);
    }
    SECTION("too few rows for the parameter count") {
        std::vector<std::vector<double>> X = {{0.1, 0.2}, {0.2, 0.1}, {0.9, 0.4}};
        CHECK_THROWS_AS(fit_logistic(X, {1, 0, 1}, {"a", "b"}), InsufficientDataError);
    }
}

TEST_CASE("complete separation is flagged, not silently reported") {
    // x < 0 always fails, x > 0 always succeeds: the MLE does not exist.
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        const double x = (i - 9.5) / 5.0;
        X.push_back({x});
        y.push_back(x > 0.0 ? 1 : 0);
    }
    auto fit = fit_logistic(X, y, {"x"});
    CHECK_FALSE(fit.converged);
    CHECK(fit.separation_suspected);
    CHECK(std::abs(fit.terms[0].b) > 10.0);
}

TEST_CASE("predicted probabilities") {
    auto d = mhq_test::logistic_dataset(200, 2, 2001);
    auto fit = fit_logistic(d.X, d.y, covariate_names(2));
    const double p0 = predict_prob(fit, d.X[0]);
    const double eta = fit.intercept.b + fit.terms[0].b * d.X[0][0] + fit.terms[1].b * d.X[0][1];
    CHECK(p0 == Approx(1.0 / (1.0 + std::exp(-eta))).epsilon(1e-14));
    CHECK_THROWS_AS(predict_prob(fit, {1.0}), ShapeMismatchError);
}

// ---------------------------------------------------------------------------
// Univariate screening

TEST_CASE("univariate screen matches reference p-values and selects the signal") {
    auto d = mhq_test::screen_dataset(mhq_test_ref::kScreenN, mhq_test_ref::kScreenSeed);
    DataMatrix m;
    m.columns = covariate_names(5);
    for (int i = 0; i < mhq_test_ref::kScreenN; ++i) {
        std::vector<std::optional<double>> row;
        for (double v : d.X[i]) row.emplace_back(v);
        m.rows.push_back(std::move(row));
        m.outcomes.push_back(core::OutcomeLabel{
            d.y[i] ? core::Outcome::Superior : core::Outcome::NotSuperior, 0});
    }

    auto res = univariate_screen(m, 0.10);
    REQUIRE(res.entries.size() == 5);
    for (int j = 0; j < 5; ++j) {
        INFO("column " << j);
        CHECK_FALSE(res.entries[j].skipped);
        CHECK(res.entries[j].converged);
        CHECK(res.entries[j].p == Approx(mhq_test_ref::kScreenPValues[j]).margin(1e-9));
    }
    // only the planted covariate (index 2) clears alpha = 0.10
    CHECK(res.selected == std::vector<std::string>{"x2"});
}

TEST_CASE("screen keeps separated columns with a caution note") {
    DataMatrix m;
    m.columns = {"separator", "noise"};
    mhq_test::SplitMix64 g(5);
    for (int i = 0; i < 30; ++i) {
        const double x = (i - 14.5) / 7.0;
        m.rows.push_back({x, g.normal()});
        m.outcomes.push_back(core::OutcomeLabel{
            x > 0.0 ? core::Outcome::Superior : core::Outcome::NotSuperior, 0});
    }
    auto res = univariate_screen(m, 0.10);
    REQUIRE(res.entries.size() == 2);
    CHECK_FALSE(res.entries[0].converged);
    CHECK_FALSE(res.entries[0].note.empty());
    CHECK_FALSE(res.entries[0].skipped);
    CHECK(res.entries[1].converged);
}

// ---------------------------------------------------------------------------
// ROC

namespace {

// Literal Mann-Whitney AUC: count positive/negative pairs won, ties half.
double auc_by_pair_counting(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0;
    long n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] == 0) continue;
        ++n_pos;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    for (int v : y) n_neg += v == 0;
    return wins / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace

TEST_CASE("rank AUC equals exhaustive pair counting on 100 randomized sets") {
    mhq_test::SplitMix64 g(8080);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10 + static_cast<int>(g.next_u64() % 91);
        std::vector<double> s(n);
        std::vector<int> y(n);
        bool any0 = false, any1 = false;
        for (int i = 0; i < n; ++i) {
            // coarse quantization forces plenty of tied scores
            s[i] = std::floor(g.uniform() * 8.0) / 8.0;
            y[i] = g.uniform() < 0.4 ? 1 : 0;
            (y[i] ? any1 : any0) = true;
        }
        if (!any0 || !any1) {
            y[0] = 0;
            y[1] = 1;
        }
        INFO("trial " << trial << " n=" << n);
        CHECK(roc_auc(s, y) == Approx(auc_by_pair_counting(s, y)).margin(1e-12));
    }
}

TEST_CASE("roc curve endpoints, monotonicity, and known values") {
    SECTION("perfect classifier") {
        std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
        std::vector<int> y = {1, 1, 0, 0};
        auto c = roc_curve(s, y);
        CHECK(c.auc == 1.0);
        CHECK(c.points.front().fpr == 0.0);
        CHECK(c.points.front().tpr == 0.0);
        CHECK(c.points.back().fpr == 1.0);
        CHECK(c.points.back().tpr == 1.0);
        CHECK(youden_threshold(c) == Approx(0.8));
    }
    SECTION("anti-classifier has AUC 0") {
        CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);
    }
    SECTION("all-tied scores give AUC 1/2") {
        CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == Approx(0.5));
    }
    SECTION("curve is monotone nondecreasing in both axes") {
        mhq_test::SplitMix64 g(31);
        std::vector<double> s;
        std::vector<int> y;
        for (int i = 0; i < 60; ++i) {
            s.push_back(g.uniform());
            y.push_back(g.uniform() < 0.5 ? 1 : 0);
        }
        y[0] = 0;
        y[1] = 1;
        auto c = roc_curve(s, y);
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
            CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
        }
    }
    SECTION("one-class input is an error") {
        CHECK_THROWS_AS(roc_auc({0.1, 0.9}, {1, 1}), OneClassOnlyError);
    }
}

TEST_CASE("confusion counts at a threshold") {
    std::vector<double> s = {0.9, 0.6, 0.5, 0.4, 0.2};
    std::vector<int> y = {1, 0, 1, 1, 0};
    auto c = confusion_at(s, y, 0.5);  // predictions: 1 1 1 0 0
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.accuracy == Approx(0.6));
    CHECK(c.sensitivity == Approx(2.0 / 3.0));
    CHECK(c.specificity == Approx(0.5));
    CHECK(c.precision == Approx(2.0 / 3.0));
    CHECK(c.f1 == Approx(2.0 / 3.0));
}

// ---------------------------------------------------------------------------
// Stratified splitting

TEST_CASE("stratified split keeps class balance and partitions the data") {
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) y.push_back(i < 12 ? 1 : 0);  // 12 pos, 28 neg
    auto sp = stratified_split(y, 0.25, 7);
    CHECK(sp.train.size() + sp.test.size() == 40);
    // round(12 * .25) = 3 positives, round(28 * .25) = 7 negatives in test
    long test_pos = 0;
    for (auto i : sp.test) test_pos += y[i];
    CHECK(sp.test.size() == 10);
    CHECK(test_pos == 3);
    // disjointness
    std::vector<std::size_t> all(sp.train);
    all.insert(all.end(), sp.test.begin(), sp.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    // determinism
    auto sp2 = stratified_split(y, 0.25, 7);
    CHECK(sp2.train == sp.train);
    CHECK(sp2.test == sp.test);
    auto sp3 = stratified_split(y, 0.25, 8);
    CHECK(sp3.test != sp.test);
}

TEST_CASE("stratified split edge cases") {
    SECTION("both sides keep at least one of each class") {
        std::vector<int> y = {1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
        auto sp = stratified_split(y, 0.5, 3);
        long train_pos = 0, test_pos = 0;
        for (auto i : sp.train) train_pos += y[i];
        for (auto i : sp.test) test_pos += y[i];
        CHECK(train_pos == 1);
        CHECK(test_pos == 1);
    }
    SECTION("class of one cannot be split") {
        std::vector<int> y = {1, 0, 0, 0};
        CHECK_THROWS_AS(stratified_split(y, 0.5, 1), InsufficientDataError);
    }
}

TEST_CASE("stratified k-fold balance") {
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) y.push_back(i % 5 == 0 ? 1 : 0);  // 10 pos, 40 neg
    auto fold = stratified_kfold(y, 5, 11);
    std::vector<int> pos_per_fold(5, 0), n_per_fold(5, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        REQUIRE(fold[i] >= 0);
        REQUIRE(fold[i] < 5);
        n_per_fold[fold[i]] += 1;
        pos_per_fold[fold[i]] += y[i];
    }
    for (int k = 0; k < 5; ++k) {
        CHECK(n_per_fold[k] == 10);
        CHECK(pos_per_fold[k] == 2);
    }
    SECTION("class smaller than k") {
        std::vector<int> y2 = {1, 1, 0, 0, 0, 0, 0, 0};
        CHECK_THROWS_AS(stratified_kfold(y2, 3, 1), InsufficientDataError);
    }
}

// ---------------------------------------------------------------------------
// With / without dynamic-parameter model comparison

namespace {

// Outcome driven by the dynamic column when `informative`, pure noise otherwise.
DataMatrix comparison_matrix(int n, bool informative, std::uint64_t seed) {
    mhq_test::SplitMix64 g(seed);
    DataMatrix m;
    m.columns = {"base_mld", "base_bd", "rr_hole_w", "rr_hole_censored"};
    for (int i = 0; i < n; ++i) {
        const double mld = g.normal(), bd = g.normal();
        const double rr = g.normal();
        const double censored = g.uniform() < 0.2 ? 1.0 : 0.0;
        m.rows.push_back({mld, bd, rr, censored});
        const double eta = informative ? 0.3 * mld + 1.6 * rr : 0.3 * mld + 0.2 * bd;
        const int y = g.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
        m.outcomes.push_back(core::OutcomeLabel{
            y ? core::Outcome::Superior : core::Outcome::NotSuperior, 0});
    }
    return m;
}

}  // namespace

TEST_CASE("model comparison detects an informative dynamic block") {
    auto m = comparison_matrix(400, true, 12021);
    CompareOptions opt;
    opt.test_fraction = 0.25;
    opt.seed = 5;
    auto cmp = compare_with_without_dp(m, opt);

    CHECK(cmp.dp_columns_present ==
          std::vector<std::string>{"rr_hole_w", "rr_hole_censored"});
    CHECK(cmp.lr_df == 2);
    CHECK(cmp.with_dp.fit.loglik >= cmp.without_dp.fit.loglik);  // nested models
    CHECK(cmp.lr_p < 0.01);
    CHECK(cmp.with_dp.auc > cmp.without_dp.auc);
    CHECK(cmp.with_dp.columns.size() == 4);
    CHECK(cmp.without_dp.columns == std::vector<std::string>{"base_mld", "base_bd"});
    // both evaluations share the same held-out rows
    CHECK(cmp.with_dp.labels == cmp.without_dp.labels);
}

TEST_CASE("model comparison stays honest when the dynamic block is noise") {
    auto m = comparison_matrix(400, false, 880);
    CompareOptions opt;
    opt.test_fraction = 0.25;
    opt.seed = 5;
    auto cmp = compare_with_without_dp(m, opt);
    CHECK(std::abs(cmp.with_dp.auc - cmp.without_dp.auc) < 0.05);
    CHECK(cmp.lr_p > 0.01);
}

TEST_CASE("model comparison with in-sample evaluation") {
    auto m = comparison_matrix(200, true, 3);
    CompareOptions opt;
    opt.test_fraction = 0.0;
    auto cmp = compare_with_without_dp(m, opt);
    CHECK(cmp.with_dp.labels.size() == 200);
    CHECK(cmp.lr_stat >= 0.0);
    SECTION("matrix without any dynamic column is rejected") {
        auto reduced = m.without_columns({"rr_hole_w", "rr_hole_censored"});
        CHECK_THROWS_AS(compare_with_without_dp(reduced, opt), Error);
    }
}
