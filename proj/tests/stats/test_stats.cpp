#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/correlation.hpp"
#include "mhquant/stats/data_matrix.hpp"
#include "mhquant/stats/shapiro_wilk.hpp"
#include "mhquant/stats/vif.hpp"
#include "reference/stat_reference.hpp"
#include "support/test_rng.hpp"

using namespace mhquant;
using namespace mhquant::stats;
using Catch::Approx;

// ---------------------------------------------------------------------------
// Shapiro-Wilk

TEST_CASE("shapiro-wilk published 25-point sample") {
    // Royston's 1995 driver data; the published single-precision results are
    // w = .83467, pw = .000914. The frozen values come from an independent
    // double-precision implementation of the same algorithm.
    const std::vector<double> x = {.139, .157,  .175,  .256,  .344,  .413,  .503, .577, .614,
                                   .655, .954,  1.392, 1.557, 1.648, 1.690, 1.994, 2.174, 2.206,
                                   3.245, 3.510, 3.571, 4.354, 4.980, 6.084, 8.351};
    auto r = shapiro_wilk(x);
    CHECK(r.w == Approx(mhq_test_ref::kShapiroRoystonW).margin(1e-9));
    CHECK(r.p == Approx(mhq_test_ref::kShapiroRoystonP).epsilon(1e-6));
    // and against the published values, which came from single-precision
    // arithmetic (hence the looser margin on the tail probability)
    CHECK(r.w == Approx(0.83467).margin(5e-6));
    CHECK(r.p == Approx(0.000914).margin(1e-6));
}

TEST_CASE("shapiro-wilk deterministic grid 1..50") {
    std::vector<double> x(50);
    std::iota(x.begin(), x.end(), 1.0);
    auto r = shapiro_wilk(x);
    CHECK(r.w == Approx(mhq_test_ref::kShapiroGridW).margin(1e-10));
    CHECK(r.p == Approx(mhq_test_ref::kShapiroGridP).epsilon(1e-8));
    CHECK(r.p > 0.05);  // a uniform ramp at n=50 squeaks past the cutoff
}

TEST_CASE("shapiro-wilk unit cases") {
    for (const auto& c : mhq_test_ref::kShapiroUnitCases) {
        auto x = mhq_test::draw_sample(c.dist_id, c.n, c.seed);
        auto r = shapiro_wilk(x);
        INFO("dist=" << c.dist_id << " n=" << c.n << " seed=" << c.seed);
        CHECK(r.w == Approx(c.w).margin(1e-9));
        CHECK(r.p == Approx(c.p).epsilon(1e-6));
    }
}

TEST_CASE("shapiro-wilk 50-case sweep against reference implementation") {
    int checked = 0;
    for (const auto& c : mhq_test_ref::kShapiroSweep) {
        auto x = mhq_test::draw_sample(c.dist_id, c.n, c.seed);
        auto r = shapiro_wilk(x);
        INFO("dist=" << c.dist_id << " n=" << c.n << " seed=" << c.seed);
        CHECK(r.w == Approx(c.w).margin(1e-9));
        if (c.p > 1e-12) CHECK(r.p == Approx(c.p).epsilon(1e-5));
        else CHECK(r.p <= 1e-12);  // deep-tail p: agree that it vanishes
        // normality decisions at alpha = 0.05 must match exactly
        CHECK((r.p > 0.05) == (c.p > 0.05));
        ++checked;
    }
    CHECK(checked == static_cast<int>(std::size(mhq_test_ref::kShapiroSweep)));
}

TEST_CASE("shapiro-wilk input validation") {
    CHECK_THROWS_AS(shapiro_wilk({1.0, 2.0}), InsufficientDataError);
    CHECK_THROWS_AS(shapiro_wilk({3.0, 3.0, 3.0, 3.0}), DegenerateSampleError);
    SECTION("n = 3 exact branch") {
        auto r = shapiro_wilk({1.0, 2.0, 3.0});
        CHECK(r.w == Approx(1.0).margin(1e-12));  // perfectly linear order stats
        CHECK(r.p > 0.9);
    }
    SECTION("sorting is internal") {
        auto a = shapiro_wilk({5.0, 1.0, 4.0, 2.0, 3.0, 9.0, 7.0});
        auto b = shapiro_wilk({1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 9.0});
        CHECK(a.w == b.w);
        CHECK(a.p == b.p);
    }
}

// ---------------------------------------------------------------------------
// Correlation

TEST_CASE("pearson and spearman against frozen reference") {
    std::vector<double> x, y;
    mhq_test::corr_dataset(mhq_test_ref::kCorrN, mhq_test_ref::kCorrSeed, x, y);

    auto pe = correlate(x, y, CorrelationMethod::Pearson);
    CHECK(pe.r == Approx(mhq_test_ref::kCorrPearsonR).margin(1e-12));
    CHECK(pe.p == Approx(mhq_test_ref::kCorrPearsonP).epsilon(1e-9));
    CHECK(pe.method == CorrelationMethod::Pearson);

    auto sp = correlate(x, y, CorrelationMethod::Spearman);
    CHECK(sp.r == Approx(mhq_test_ref::kCorrSpearmanR).margin(1e-12));
    CHECK(sp.p == Approx(mhq_test_ref::kCorrSpearmanP).epsilon(1e-9));
    CHECK(sp.method == CorrelationMethod::Spearman);

    SECTION("auto picks pearson when both samples look normal") {
        auto au = correlate(x, y, CorrelationMethod::Auto);
        CHECK(au.method == CorrelationMethod::Pearson);
        CHECK(au.r == pe.r);
    }
}

TEST_CASE("auto correlation falls back to spearman under non-normality") {
    auto x = mhq_test::draw_sample(3, 60, 77);  // heavy-tailed (cubed normals)
    auto y = mhq_test::draw_sample(0, 60, 78);
    REQUIRE(shapiro_wilk(x).p <= 0.05);
    auto r = correlate(x, y, CorrelationMethod::Auto);
    CHECK(r.method == CorrelationMethod::Spearman);
}

TEST_CASE("correlation basics and guards") {
    SECTION("perfect monotone association") {
        std::vector<double> x = {1, 2, 3, 4, 5};
        std::vector<double> lin = {2, 4, 6, 8, 10};
        std::vector<double> mono = {1, 8, 27, 64, 125};
        auto a = correlate(x, lin, CorrelationMethod::Pearson);
        CHECK(a.r == Approx(1.0).margin(1e-14));
        CHECK(a.p == 0.0);
        auto b = correlate(x, mono, CorrelationMethod::Spearman);
        CHECK(b.r == Approx(1.0).margin(1e-14));
        auto c = correlate(x, mono, CorrelationMethod::Pearson);
        CHECK(c.r < 1.0);  // convex curve: pearson strictly below spearman
    }
    SECTION("ranks average over ties") {
        auto rk = average_ranks({10.0, 20.0, 20.0, 30.0});
        CHECK(rk == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    }
    SECTION("shape / size / degeneracy errors") {
        CHECK_THROWS_AS(correlate({1, 2, 3}, {1, 2}, CorrelationMethod::Pearson),
                        ShapeMismatchError);
        CHECK_THROWS_AS(correlate({1, 2}, {1, 2}, CorrelationMethod::Pearson),
                        InsufficientDataError);
        CHECK_THROWS_AS(correlate({1, 1, 1, 1}, {1, 2, 3, 4}, CorrelationMethod::Pearson),
                        DegenerateSampleError);
    }
}

// ---------------------------------------------------------------------------
// Missing-data cleaning

namespace {

DataMatrix tiny_matrix() {
    DataMatrix m;
    m.columns = {"a", "b", "c"};
    auto v = [](double d) { return std::optional<double>(d); };
    const std::optional<double> none;
    m.rows = {
        {v(1.0), v(10.0), none},   // c missing
        {v(2.0), v(20.0), v(1.0)},
        {v(3.0), none, v(2.0)},    // b missing
        {v(4.0), v(40.0), v(3.0)},
        {v(5.0), v(50.0), none},   // c missing again
        {v(6.0), v(60.0), v(4.0)},
        {v(7.0), v(70.0), v(5.0)},
        {v(8.0), v(80.0), v(6.0)},
        {v(9.0), v(90.0), v(7.0)},
        {v(10.0), v(100.0), v(8.0)},
        {v(11.0), v(110.0), v(9.0)},
        {v(12.0), v(120.0), v(10.0)},
    };
    m.outcomes.assign(12, core::OutcomeLabel{core::Outcome::NotSuperior, 0});
    return m;
}

}  // namespace

TEST_CASE("clean: outcome rows, imputation, column dropping") {
    SECTION("sparse column dropped, mild gaps imputed") {
        auto m = tiny_matrix();
        // b: 1/12 missing (8.3% < 10%) -> impute; c: 2/12 (16.7%) -> drop.
        auto [out, rep] = clean(m, 0.10);
        CHECK(out.columns == std::vector<std::string>{"a", "b"});
        REQUIRE(rep.dropped_columns.size() == 1);
        CHECK(rep.dropped_columns[0].column == "c");
        CHECK(rep.dropped_columns[0].fraction_missing == Approx(2.0 / 12.0));
        REQUIRE(rep.imputed.size() == 1);
        CHECK(rep.imputed[0].column == "b");
        CHECK(rep.imputed[0].n_imputed == 1);
        // mean of the 11 observed b values
        const double mean_b = (10 + 20 + 40 + 50 + 60 + 70 + 80 + 90 + 100 + 110 + 120) / 11.0;
        CHECK(rep.imputed[0].imputed_value == Approx(mean_b));
        CHECK(out.rows[2][1] == std::optional<double>(mean_b));
        CHECK(out.complete());
        CHECK(rep.dropped_outcome_rows == 0);
    }
    SECTION("rows without an outcome are removed before column accounting") {
        auto m = tiny_matrix();
        m.outcomes[0].reset();  // drops the row that had c missing
        auto [out, rep] = clean(m, 0.10);
        CHECK(rep.dropped_outcome_rows == 1);
        CHECK(out.n_rows() == 11);
        // c is now 1/11 missing (9.1% < 10%): imputed instead of dropped.
        CHECK(out.columns == std::vector<std::string>{"a", "b", "c"});
        CHECK(rep.dropped_columns.empty());
        CHECK(rep.imputed.size() == 2);
    }
    SECTION("all columns unusable") {
        DataMatrix m;
        m.columns = {"x"};
        m.rows = {{std::nullopt}, {std::nullopt}, {std::nullopt}};
        m.outcomes.assign(3, core::OutcomeLabel{core::Outcome::Superior, 25});
        CHECK_THROWS_AS(clean(m, 0.10), AllColumnsDroppedError);
    }
    SECTION("empty input") {
        DataMatrix m;
        m.columns = {"x"};
        CHECK_THROWS_AS(clean(m, 0.10), EmptyInputError);
        DataMatrix m2 = tiny_matrix();
        for (auto& o : m2.outcomes) o.reset();
        CHECK_THROWS_AS(clean(m2, 0.10), EmptyInputError);
    }
}

// ---------------------------------------------------------------------------
// Variance inflation factors

namespace {

DataMatrix vif_matrix(int n, bool add_collinear) {
    mhq_test::SplitMix64 g(99);
    DataMatrix m;
    m.columns = {"u", "v", "w"};
    if (add_collinear) m.columns.push_back("u_plus_v");
    for (int i = 0; i < n; ++i) {
        const double u = g.normal(), v = g.normal(), w = g.normal();
        std::vector<std::optional<double>> row = {u, v, w};
        if (add_collinear) row.push_back(u + v);
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace

TEST_CASE("variance inflation factors") {
    SECTION("independent columns sit near 1") {
        auto m = vif_matrix(500, false);
        auto vifs = vif_all(m);
        REQUIRE(vifs.size() == 3);
        for (const auto& e : vifs) {
            CHECK(e.vif >= 1.0);
            CHECK(e.vif < 1.1);
        }
    }
    SECTION("exact collinearity reports infinity") {
        auto m = vif_matrix(200, true);
        auto vifs = vif_all(m);
        bool saw_inf = false;
        for (const auto& e : vifs)
            if (std::isinf(e.vif)) saw_inf = true;
        CHECK(saw_inf);
    }
    SECTION("manual r-squared cross-check on a correlated pair") {
        // x2 = x1 + noise: VIF(x1) should equal 1 / (1 - r^2) with r the
        // pearson correlation between the two columns (p = 2 case).
        mhq_test::SplitMix64 g(123);
        DataMatrix m;
        m.columns = {"x1", "x2"};
        std::vector<double> c1, c2;
        for (int i = 0; i < 300; ++i) {
            const double a = g.normal();
            const double b = a + 0.5 * g.normal();
            m.rows.push_back({a, b});
            c1.push_back(a);
            c2.push_back(b);
        }
        auto vifs = vif_all(m);
        auto r = correlate(c1, c2, CorrelationMethod::Pearson);
        const double expect = 1.0 / (1.0 - r.r * r.r);
        CHECK(vifs[0].vif == Approx(expect).epsilon(1e-9));
        CHECK(vifs[1].vif == Approx(expect).epsilon(1e-9));
    }
    SECTION("greedy elimination removes the collinear column") {
        auto m = vif_matrix(200, true);
        auto elim = vif_eliminate(m, 5.0);
        CHECK(!elim.removed.empty());
        CHECK(elim.reduced.n_cols() == static_cast<int>(4 - elim.removed.size()));
        for (const auto& e : elim.final_vifs) CHECK(e.vif <= 5.0);
        // the three independent columns must all survive in some order
        CHECK(elim.reduced.n_cols() == 3);
    }
    SECTION("guards") {
        DataMatrix m;
        m.columns = {"only"};
        m.rows = {{1.0}, {2.0}, {3.0}};
        CHECK_THROWS_AS(vif_all(m), InsufficientDataError);
    }
}
