#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/shapiro_wilk.hpp"
#include "mhquant/stats/special_functions.hpp"

namespace mhquant::stats {

enum class CorrelationMethod { Auto, Pearson, Spearman };

inline const char* to_string(CorrelationMethod m) {
    switch (m) {
        case CorrelationMethod::Auto:     return "auto";
        case CorrelationMethod::Pearson:  return "pearson";
        case CorrelationMethod::Spearman: return "spearman";
    }
    return "?";
}

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    CorrelationMethod method = CorrelationMethod::Pearson;  ///< method actually used
};

/// Ranks with ties sharing their average rank (1-based, as usual).
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = (i + j) / 2.0 + 1.0;
        for (int k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

inline CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y,
                                 CorrelationMethod tag) {
    const int n = static_cast<int>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0))
        throw DegenerateSampleError("constant variable in correlation");

    CorrelationResult out;
    out.method = tag;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(out.r) == 1.0) {
        out.p = 0.0;
    } else {
        const double t = out.r * std::sqrt((n - 2) / (1.0 - out.r * out.r));
        out.p = t_sf_two_sided(t, n - 2);
    }
    return out;
}

}  // namespace detail

/// Correlation between two paired variables. In Auto mode the method is
/// gated on normality: Pearson when Shapiro-Wilk accepts normality for both
/// variables at `normality_alpha`, Spearman otherwise. The Spearman p-value
/// uses the usual t approximation on the rank correlation.
inline CorrelationResult correlate(const std::vector<double>& x, const std::vector<double>& y,
                                   CorrelationMethod method = CorrelationMethod::Auto,
                                   double normality_alpha = 0.05) {
    if (x.size() != y.size())
        throw ShapeMismatchError("correlation inputs differ in length");
    if (x.size() < 3) throw InsufficientDataError("correlation needs n >= 3");

    if (method == CorrelationMethod::Auto) {
        const bool normal_x = shapiro_wilk(x).p > normality_alpha;
        const bool normal_y = shapiro_wilk(y).p > normality_alpha;
        method = normal_x && normal_y ? CorrelationMethod::Pearson
                                      : CorrelationMethod::Spearman;
    }
    if (method == CorrelationMethod::Pearson)
        return detail::pearson(x, y, CorrelationMethod::Pearson);
    return detail::pearson(average_ranks(x), average_ranks(y), CorrelationMethod::Spearman);
}

}  // namespace mhquant::stats
