#pragma once

#include <cstdint>
#include <vector>

#include "mhquant/core/class_label.hpp"
#include "mhquant/core/scan.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/stats/roc.hpp"

namespace mhquant::segmetrics {

/// Pixel-level confusion counts for one class. Associative under +, so
/// counts from many scan pairs pool into one micro-aggregated tally.
struct BinaryCounts {
    long tp = 0, fp = 0, tn = 0, fn = 0;

    long total() const { return tp + fp + tn + fn; }
    long truth_positives() const { return tp + fn; }

    BinaryCounts& operator+=(const BinaryCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

struct OverlapMetrics {
    double dice = 1.0;
    double iou = 1.0;
    double accuracy = 1.0;
    double f1 = 1.0;
};

/// Overlap metrics from confusion counts.
///
/// Dice and F1 are written as the same expression 2tp / (2tp + fp + fn):
/// for hard masks 2 * precision * recall / (precision + recall) collapses to
/// it algebraically, and sharing the expression keeps the two columns equal
/// bit for bit instead of merely close. When the class is absent from both
/// masks (tp = fp = fn = 0) all overlap metrics are 1 — agreeing on absence
/// is perfect agreement.
inline OverlapMetrics overlap_metrics(const BinaryCounts& c) {
    OverlapMetrics m;
    const long denom_dice = 2 * c.tp + c.fp + c.fn;
    const long denom_union = c.tp + c.fp + c.fn;
    if (denom_union > 0) {
        m.dice = 2.0 * c.tp / static_cast<double>(denom_dice);
        m.f1 = m.dice;
        m.iou = static_cast<double>(c.tp) / denom_union;
    }
    m.accuracy = c.total() > 0 ? static_cast<double>(c.tp + c.tn) / c.total() : 1.0;
    return m;
}

inline BinaryCounts count_overlap(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    if (pred.size() != truth.size())
        throw ShapeMismatchError("count_overlap: mask sizes differ");
    BinaryCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i]) ++c.tp;
        else if (pred[i]) ++c.fp;
        else if (truth[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline OverlapMetrics binary_metrics(const std::vector<bool>& pred,
                                     const std::vector<bool>& truth) {
    return overlap_metrics(count_overlap(pred, truth));
}

/// Confusion counts for one class of a labelled scan pair.
inline BinaryCounts count_class(const core::LabeledScan& pred, const core::LabeledScan& truth,
                                core::ClassLabel cls) {
    if (!pred.same_shape(truth))
        throw ShapeMismatchError("count_class: scan dimensions differ");
    const auto code = core::label_code(cls);
    BinaryCounts c;
    const auto& pl = pred.labels();
    const auto& tl = truth.labels();
    for (std::size_t i = 0; i < pl.size(); ++i) {
        const bool p = pl[i] == code, t = tl[i] == code;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// Pixel-level ROC AUC of a per-pixel probability map against a hard truth
/// mask (the soft path; needs both classes present in the truth).
inline double roc_auc_pixels(const std::vector<double>& prob, const std::vector<bool>& truth) {
    if (prob.size() != truth.size())
        throw ShapeMismatchError("roc_auc_pixels: sizes differ");
    for (double v : prob)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("roc_auc_pixels: probabilities must lie in [0, 1]");
    std::vector<int> y(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) y[i] = truth[i] ? 1 : 0;
    return stats::roc_auc(prob, y);
}

/// Hard-mask stand-in for an AUC column: balanced accuracy (sens + spec) / 2.
/// A side without any pixels is vacuously perfect (0/0 -> 1), which keeps the
/// both-empty case consistent with the overlap conventions above.
inline double fallback_auc(const BinaryCounts& c) {
    const double sens = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 1.0;
    const double spec = c.tn + c.fp > 0 ? static_cast<double>(c.tn) / (c.tn + c.fp) : 1.0;
    return 0.5 * (sens + spec);
}

struct ClassMetrics {
    core::ClassLabel cls = core::ClassLabel::Background;
    double dice = 1.0;
    double iou = 1.0;
    double accuracy = 1.0;
    double f1 = 1.0;
    double roc_auc = 1.0;
    long support = 0;  ///< ground-truth pixels of this class
    bool auc_is_fallback = false;
};

/// Unweighted arithmetic mean over class rows (the "Mean" row of the metric
/// table). Support sums; the fallback flag propagates if any row used it.
inline ClassMetrics mean_row(const std::vector<ClassMetrics>& rows) {
    if (rows.empty()) throw EmptyInputError("mean_row");
    ClassMetrics m;
    m.dice = m.iou = m.accuracy = m.f1 = m.roc_auc = 0.0;
    for (const auto& r : rows) {
        m.dice += r.dice;
        m.iou += r.iou;
        m.accuracy += r.accuracy;
        m.f1 += r.f1;
        m.roc_auc += r.roc_auc;
        m.support += r.support;
        m.auc_is_fallback = m.auc_is_fallback || r.auc_is_fallback;
    }
    const double n = static_cast<double>(rows.size());
    m.dice /= n;
    m.iou /= n;
    m.accuracy /= n;
    m.f1 /= n;
    m.roc_auc /= n;
    return m;
}

enum class Aggregation {
    Micro,  ///< pool confusion counts over all pairs, then compute metrics
    Macro,  ///< compute metrics per pair, then average over pairs
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics mean;
    Aggregation aggregation = Aggregation::Micro;
};

/// Every label except Background, in label-code order.
inline std::vector<core::ClassLabel> evaluated_classes() {
    std::vector<core::ClassLabel> out;
    for (auto c : core::kAllClassLabels)
        if (c != core::ClassLabel::Background) out.push_back(c);
    return out;
}

/// Per-class metric table for a paired set of predicted and truth scans.
/// Micro aggregation (default) pools pixel counts across pairs; macro
/// computes each pair separately and averages, letting empty-class images
/// contribute their conventional 1.0 rows. Hard masks carry no probability
/// information, so the AUC column uses the balanced-accuracy fallback and
/// says so via auc_is_fallback.
inline MetricsReport report(const std::vector<core::LabeledScan>& pred,
                            const std::vector<core::LabeledScan>& truth,
                            const std::vector<core::ClassLabel>& classes = evaluated_classes(),
                            Aggregation aggregation = Aggregation::Micro) {
    if (pred.size() != truth.size())
        throw ShapeMismatchError("report: pred and truth scan counts differ");
    if (pred.empty()) throw EmptyInputError("report: no scan pairs");
    if (classes.empty()) throw EmptyInputError("report: no classes to evaluate");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (!pred[i].same_shape(truth[i]))
            throw ShapeMismatchError("report: pair " + std::to_string(i) +
                                     " has mismatched dimensions");

    MetricsReport rep;
    rep.aggregation = aggregation;
    for (auto cls : classes) {
        ClassMetrics cm;
        cm.cls = cls;
        cm.auc_is_fallback = true;
        if (aggregation == Aggregation::Micro) {
            BinaryCounts pooled;
            for (std::size_t i = 0; i < pred.size(); ++i)
                pooled += count_class(pred[i], truth[i], cls);
            const auto om = overlap_metrics(pooled);
            cm.dice = om.dice;
            cm.iou = om.iou;
            cm.accuracy = om.accuracy;
            cm.f1 = om.f1;
            cm.roc_auc = fallback_auc(pooled);
            cm.support = pooled.truth_positives();
        } else {
            double dice = 0, iou = 0, acc = 0, f1 = 0, auc = 0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const auto c = count_class(pred[i], truth[i], cls);
                const auto om = overlap_metrics(c);
                dice += om.dice;
                iou += om.iou;
                acc += om.accuracy;
                f1 += om.f1;
                auc += fallback_auc(c);
                cm.support += c.truth_positives();
            }
            const double n = static_cast<double>(pred.size());
            cm.dice = dice / n;
            cm.iou = iou / n;
            cm.accuracy = acc / n;
            cm.f1 = f1 / n;
            cm.roc_auc = auc / n;
        }
        rep.per_class.push_back(cm);
    }
    rep.mean = mean_row(rep.per_class);
    return rep;
}

}  // namespace mhquant::segmetrics
