#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/special_functions.hpp"

namespace mhquant::stats {

struct ShapiroWilkResult {
    double w = 0.0;
    double p = 1.0;
    int n = 0;
};

namespace detail {

/// poly(c, nord, x) = c[0] + c[1] x + ... + c[nord-1] x^(nord-1).
inline double sw_poly(const double* c, int nord, double x) {
    double p = x * c[nord - 1];
    for (int j = nord - 2; j >= 1; --j) p = (p + c[j]) * x;
    return c[0] + p;
}

}  // namespace detail

/// Shapiro-Wilk W test of composite normality (Royston's AS R94 algorithm,
/// complete samples, 3 <= n <= 5000), evaluated in double precision. The
/// input need not be sorted. All identical values are a degenerate sample.
///
/// W is the squared correlation between the order statistics and Royston's
/// approximate normal scores; the p-value comes from his normalizing
/// transforms (exact for n = 3, a log-gamma transform for n <= 11, and a
/// log-normal transform above that).
inline ShapiroWilkResult shapiro_wilk(std::vector<double> x) {
    const int n = static_cast<int>(x.size());
    if (n < 3) throw InsufficientDataError("Shapiro-Wilk needs n >= 3");
    if (n > 5000) throw std::invalid_argument("Shapiro-Wilk supports n <= 5000");
    std::sort(x.begin(), x.end());

    const double range = x[n - 1] - x[0];
    if (!(range > 0.0) || !std::isfinite(range))
        throw DegenerateSampleError("zero range in Shapiro-Wilk sample");

    // Polynomial coefficients from AS R94.
    static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double gpoly[2] = {-2.273, 0.459};
    constexpr double pi6 = 1.909859;   // 6/pi as used by Royston
    constexpr double stqr = 1.047198;  // pi/3
    constexpr double small = 1e-19;

    const double an = n;
    const int n2 = n / 2;
    std::vector<double> a(n2);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        // Approximate normal scores m_i (negative: lower half), then
        // Royston's polynomial corrections for the two largest coefficients
        // and renormalization of the rest.
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (int i = 0; i < n2; ++i) {
            a[i] = normal_quantile((i + 1 - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = detail::sw_poly(c1, 6, rsn) - a[0] / ssumm2;
        int i1;
        double fac;
        if (n > 5) {
            i1 = 2;
            const double a2 = -a[1] / ssumm2 + detail::sw_poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[0] = a1;
            a[1] = a2;
        } else {
            i1 = 1;
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
            a[0] = a1;
        }
        for (int i = i1; i < n2; ++i) a[i] = -a[i] / fac;
    }

    // W as the squared correlation between range-scaled data and the
    // antisymmetric coefficient vector (a is stored as its upper half).
    auto coef = [&](int i, int j) {
        // sign(1, i - j) * a[min(i, j)] in the original indexing.
        return (i >= j ? 1.0 : -1.0) * a[std::min(i, j)];
    };
    double sa = -a[0];
    double sx = x[0] / range;
    {
        int j = n - 2;
        for (int i = 1; i < n; ++i) {
            const double xi = x[i] / range;
            sx += xi;
            if (i != j) sa += coef(i, j);
            --j;
        }
    }
    sa /= n;
    sx /= n;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    {
        int j = n - 1;
        for (int i = 0; i < n; ++i) {
            const double asa = (i != j ? coef(i, j) : 0.0) - sa;
            const double xsx = x[i] / range - sx;
            ssa += asa * asa;
            ssx += xsx * xsx;
            sax += asa * xsx;
            --j;
        }
    }
    // w1 = 1 - W computed directly, which keeps precision when W is near 1.
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);

    ShapiroWilkResult out;
    out.n = n;
    out.w = 1.0 - w1;

    if (n == 3) {
        out.p = pi6 * (std::asin(std::sqrt(out.w)) - stqr);
        out.p = std::clamp(out.p, 0.0, 1.0);
        return out;
    }
    double y = std::log(w1);
    const double xx = std::log(an);
    double m, s;
    if (n <= 11) {
        const double gamma = detail::sw_poly(gpoly, 2, an);
        if (y >= gamma) {
            out.p = small;
            return out;
        }
        y = -std::log(gamma - y);
        m = detail::sw_poly(c3, 4, an);
        s = std::exp(detail::sw_poly(c4, 4, an));
    } else {
        m = detail::sw_poly(c5, 4, xx);
        s = std::exp(detail::sw_poly(c6, 3, xx));
    }
    out.p = std::clamp(normal_sf((y - m) / s), 0.0, 1.0);
    return out;
}

}  // namespace mhquant::stats
