#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/stats/correlation.hpp"  // average_ranks

namespace mhquant::stats {

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  ///< from (0,0) up to (1,1), threshold descending
    double auc = 0.0;
};

namespace detail {

inline void check_two_classes(const std::vector<int>& labels) {
    int pos = 0;
    for (int v : labels) pos += v != 0;
    if (pos == 0 || pos == static_cast<int>(labels.size())) throw OneClassOnlyError();
}

}  // namespace detail

/// Area under the ROC curve via the rank (Mann-Whitney) formulation:
/// AUC = (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg), with tied scores
/// receiving average ranks so ties contribute 1/2 per crossing pair.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeMismatchError("roc_auc: scores vs labels");
    if (scores.empty()) throw EmptyInputError("roc_auc");
    detail::check_two_classes(labels);
    const auto ranks = average_ranks(scores);
    double rank_pos = 0.0;
    long n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0) {
            rank_pos += ranks[i];
            ++n_pos;
        }
    }
    const long n_neg = static_cast<long>(labels.size()) - n_pos;
    return (rank_pos - 0.5 * n_pos * (n_pos + 1)) / (static_cast<double>(n_pos) * n_neg);
}

/// Full ROC curve, one operating point per distinct score (classify positive
/// when score >= threshold), bracketed by the all-negative and all-positive
/// corners. The reported AUC comes from roc_auc, not the polyline, so tied
/// scores are handled identically either way.
inline RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    RocCurve out;
    out.auc = roc_auc(scores, labels);  // also validates inputs

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    long n_pos = 0, n_neg = 0;
    for (int v : labels) (v != 0 ? n_pos : n_neg) += 1;

    out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] != 0 ? tp : fp) += 1;
            ++i;
        }
        out.points.push_back({s, static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos});
    }
    return out;
}

struct ConfusionMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double sensitivity = 0.0;  ///< recall on the positive class
    double specificity = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// Hard confusion counts at a fixed threshold (positive when score >= t).
/// Undefined ratios (no positives predicted, no positives present, ...) are
/// reported as 0 rather than NaN so downstream tables stay printable.
inline ConfusionMetrics confusion_at(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double threshold = 0.5) {
    if (scores.size() != labels.size()) throw ShapeMismatchError("confusion_at: scores vs labels");
    if (scores.empty()) throw EmptyInputError("confusion_at");
    ConfusionMetrics c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++c.tp;
        else if (pred && !truth) ++c.fp;
        else if (!pred && truth) ++c.fn;
        else ++c.tn;
    }
    const double n = static_cast<double>(scores.size());
    c.accuracy = (c.tp + c.tn) / n;
    c.sensitivity = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    c.specificity = c.tn + c.fp > 0 ? static_cast<double>(c.tn) / (c.tn + c.fp) : 0.0;
    c.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    c.f1 = c.precision + c.sensitivity > 0.0
               ? 2.0 * c.precision * c.sensitivity / (c.precision + c.sensitivity)
               : 0.0;
    return c;
}

/// Threshold maximizing Youden's J = sensitivity + specificity - 1. Ties go
/// to the first (highest-threshold) maximizer on the curve.
inline double youden_threshold(const RocCurve& curve) {
    if (curve.points.empty()) throw EmptyInputError("youden_threshold");
    double best_j = -1.0, best_t = curve.points.front().threshold;
    for (const auto& pt : curve.points) {
        const double j = pt.tpr - pt.fpr;
        if (j > best_j) {
            best_j = j;
            best_t = pt.threshold;
        }
    }
    return best_t;
}

}  // namespace mhquant::stats
