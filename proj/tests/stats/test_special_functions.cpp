#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mhquant/stats/linalg.hpp"
#include "mhquant/stats/special_functions.hpp"
#include "reference/stat_reference.hpp"

using namespace mhquant::stats;
using Catch::Approx;

TEST_CASE("normal cdf / sf / quantile") {
    SECTION("symmetry and known points") {
        CHECK(normal_cdf(0.0) == Approx(0.5).margin(1e-15));
        CHECK(normal_sf(0.0) == Approx(0.5).margin(1e-15));
        CHECK(normal_cdf(1.0) + normal_cdf(-1.0) == Approx(1.0).margin(1e-15));
        CHECK(normal_cdf(1.959963984540054) == Approx(0.975).margin(1e-12));
    }
    SECTION("quantile inverts cdf over a wide range") {
        for (double p : {1e-10, 1e-6, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999}) {
            const double x = normal_quantile(p);
            CHECK(normal_cdf(x) == Approx(p).epsilon(1e-12));
        }
    }
    SECTION("frozen spot values") {
        CHECK(normal_quantile(0.975) == Approx(mhq_test_ref::kNormQuantile_0p975).margin(1e-12));
        CHECK(normal_quantile(1e-4) == Approx(mhq_test_ref::kNormQuantile_1em4).margin(1e-12));
    }
    SECTION("domain errors") {
        CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
        CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
    }
}

TEST_CASE("chi-squared survival function") {
    SECTION("frozen values") {
        CHECK(chi2_sf(3.84, 1) == Approx(mhq_test_ref::kChi2Sf_3p84_df1).epsilon(1e-12));
        CHECK(chi2_sf(7.2, 3) == Approx(mhq_test_ref::kChi2Sf_7p2_df3).epsilon(1e-12));
    }
    SECTION("df=1 equals the two-sided normal tail exactly") {
        // For one degree of freedom the survival function is erfc(sqrt(x/2)),
        // and the implementation must hit that identity bit-for-bit because
        // Wald p-values are defined through it.
        for (double x : {0.01, 0.5, 1.0, 3.84, 10.0, 30.0}) {
            CHECK(chi2_sf(x, 1) == std::erfc(std::sqrt(x / 2.0)));
        }
    }
    SECTION("edge behaviour") {
        CHECK(chi2_sf(0.0, 1) == 1.0);
        CHECK(chi2_sf(0.0, 5) == 1.0);
        CHECK(chi2_sf(1e4, 2) < 1e-100);
        CHECK(chi2_sf(-1.0, 1) == 1.0);  // statistics are >= 0; clamp, don't throw
        CHECK_THROWS_AS(chi2_sf(1.0, 0), std::invalid_argument);
    }
}

TEST_CASE("regularized incomplete beta and gamma") {
    SECTION("beta symmetry I_x(a,b) = 1 - I_{1-x}(b,a)") {
        for (double a : {0.5, 2.0, 7.5})
            for (double b : {0.5, 3.0, 11.0})
                for (double x : {0.05, 0.3, 0.5, 0.8, 0.99}) {
                    CHECK(ibeta(a, b, x) == Approx(1.0 - ibeta(b, a, 1.0 - x)).margin(1e-13));
                }
    }
    SECTION("beta endpoints and uniform case") {
        CHECK(ibeta(2.0, 3.0, 0.0) == 0.0);
        CHECK(ibeta(2.0, 3.0, 1.0) == 1.0);
        CHECK(ibeta(1.0, 1.0, 0.37) == Approx(0.37).epsilon(1e-14));
    }
    SECTION("gamma_p + gamma_q = 1") {
        for (double a : {0.5, 1.5, 10.0})
            for (double x : {0.1, 1.0, 5.0, 25.0})
                CHECK(gamma_p(a, x) + gamma_q(a, x) == Approx(1.0).margin(1e-13));
    }
    SECTION("gamma_p(1, x) = 1 - e^-x") {
        for (double x : {0.2, 1.0, 4.0})
            CHECK(gamma_p(1.0, x) == Approx(1.0 - std::exp(-x)).epsilon(1e-13));
    }
}

TEST_CASE("two-sided t-tail probability") {
    SECTION("frozen value t=2.1, df=18") {
        CHECK(t_sf_two_sided(2.1, 18) == Approx(mhq_test_ref::kTSf2Sided_t2p1_df18).epsilon(1e-12));
    }
    SECTION("t = 0 gives p = 1, symmetry in sign") {
        CHECK(t_sf_two_sided(0.0, 7) == Approx(1.0).margin(1e-14));
        CHECK(t_sf_two_sided(1.7, 12) == Approx(t_sf_two_sided(-1.7, 12)).epsilon(1e-14));
    }
    SECTION("large df approaches the normal two-sided tail") {
        const double p_t = t_sf_two_sided(1.96, 100000);
        const double p_n = 2.0 * normal_sf(1.96);
        CHECK(p_t == Approx(p_n).epsilon(1e-4));
    }
}

TEST_CASE("dense matrix inversion") {
    SECTION("identity round trip") {
        Matrix a(3, 3);
        a(0, 0) = 4; a(0, 1) = 1; a(0, 2) = 0;
        a(1, 0) = 1; a(1, 1) = 3; a(1, 2) = 1;
        a(2, 0) = 0; a(2, 1) = 1; a(2, 2) = 5;
        auto inv = invert(a);
        REQUIRE(inv.has_value());
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += a(r, k) * (*inv)(k, c);
                CHECK(s == Approx(r == c ? 1.0 : 0.0).margin(1e-12));
            }
    }
    SECTION("singular matrix is rejected, not mangled") {
        Matrix a(2, 2);
        a(0, 0) = 1; a(0, 1) = 2;
        a(1, 0) = 2; a(1, 1) = 4;
        CHECK_FALSE(invert(a).has_value());
    }
    SECTION("solve matches a hand-computed system") {
        Matrix a(2, 2);
        a(0, 0) = 2; a(0, 1) = 1;
        a(1, 0) = 1; a(1, 1) = 3;
        auto x = solve(a, {5.0, 10.0});
        REQUIRE(x.has_value());
        CHECK((*x)[0] == Approx(1.0).margin(1e-12));
        CHECK((*x)[1] == Approx(3.0).margin(1e-12));
    }
}
