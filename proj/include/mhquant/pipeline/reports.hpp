#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhquant/core/csv.hpp"
#include "mhquant/core/stage.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/fusion/harness.hpp"
#include "mhquant/pipeline/run_config.hpp"
#include "mhquant/segmetrics/metrics.hpp"
#include "mhquant/stats/compare.hpp"
#include "mhquant/stats/correlation.hpp"
#include "mhquant/stats/data_matrix.hpp"
#include "mhquant/stats/logistic.hpp"
#include "mhquant/stats/roc.hpp"
#include "mhquant/stats/shapiro_wilk.hpp"
#include "mhquant/stats/vif.hpp"

namespace mhquant::pipeline {

/// Externally reported deep-model AUC per horizon, carried into reports so a
/// reader can place our desk-scale numbers next to the published ones. These
/// are context values only, never an assertion target.
inline std::optional<double> context_auc(core::Stage horizon) {
    switch (horizon) {
        case core::Stage::W2: return 0.94;
        case core::Stage::M3: return 0.90;
        case core::Stage::M6: return 0.91;
        case core::Stage::M12: return 0.89;
        default: return std::nullopt;
    }
}

/// Per-column results of the pre-model screening passes, gathered by the fit
/// command and serialized below.
struct ColumnScreen {
    std::string column;
    std::optional<stats::ShapiroWilkResult> normality;   ///< unset: too few distinct values
    std::optional<stats::CorrelationResult> correlation; ///< against BCVA letter change
    std::string note;                                    ///< why something is unset
};

namespace detail {

/// Finite doubles pass through; NaN/Inf become null so the JSON stays valid.
inline nlohmann::json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline nlohmann::json term_json(const stats::LogisticTerm& t) {
    return {{"name", t.name},       {"b", num(t.b)},
            {"se", num(t.se)},      {"wald", num(t.wald)},
            {"p", num(t.p)},        {"odds_ratio", num(t.odds_ratio)},
            {"ci_low", num(t.ci_low)}, {"ci_high", num(t.ci_high)}};
}

inline nlohmann::json fit_json(const stats::LogisticFit& f) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : f.terms) terms.push_back(term_json(t));
    return {{"intercept", term_json(f.intercept)},
            {"terms", terms},
            {"loglik", num(f.loglik)},
            {"loglik_null", num(f.loglik_null)},
            {"nagelkerke_r2", num(f.nagelkerke_r2)},
            {"n", f.n},
            {"iterations", f.iterations},
            {"converged", f.converged},
            {"separation_suspected", f.separation_suspected}};
}

inline nlohmann::json confusion_json(const stats::ConfusionMetrics& c) {
    return {{"tp", c.tp},
            {"fp", c.fp},
            {"tn", c.tn},
            {"fn", c.fn},
            {"accuracy", num(c.accuracy)},
            {"sensitivity", num(c.sensitivity)},
            {"specificity", num(c.specificity)},
            {"precision", num(c.precision)},
            {"f1", num(c.f1)}};
}

inline nlohmann::json eval_json(const stats::ModelEval& e) {
    return {{"fit", fit_json(e.fit)},
            {"auc", num(e.auc)},
            {"confusion", confusion_json(e.confusion)},
            {"columns", e.columns}};
}

inline nlohmann::json cleaning_json(const stats::CleaningReport& r) {
    nlohmann::json imputed = nlohmann::json::array();
    for (const auto& c : r.imputed)
        imputed.push_back({{"column", c.column},
                           {"fraction_missing", num(c.fraction_missing)},
                           {"imputed_value", num(c.imputed_value)},
                           {"n_imputed", c.n_imputed}});
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& c : r.dropped_columns)
        dropped.push_back(
            {{"column", c.column}, {"fraction_missing", num(c.fraction_missing)}});
    return {{"dropped_outcome_rows", r.dropped_outcome_rows},
            {"imputed", imputed},
            {"dropped_columns", dropped}};
}

inline nlohmann::json screening_json(const std::vector<ColumnScreen>& cols) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cols) {
        nlohmann::json j{{"column", c.column}};
        if (c.normality)
            j["normality"] = {{"w", num(c.normality->w)},
                              {"p", num(c.normality->p)},
                              {"n", c.normality->n}};
        if (c.correlation)
            j["correlation"] = {{"r", num(c.correlation->r)},
                                {"p", num(c.correlation->p)},
                                {"method", to_string(c.correlation->method)}};
        if (!c.note.empty()) j["note"] = c.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline nlohmann::json vif_json(const stats::VifElimination& v) {
    nlohmann::json finals = nlohmann::json::array();
    for (const auto& e : v.final_vifs)
        finals.push_back({{"column", e.column}, {"vif", num(e.vif)}});
    return {{"removed", v.removed}, {"final_vifs", finals}};
}

inline nlohmann::json screen_json(const stats::ScreenResult& s) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : s.entries) {
        nlohmann::json j{{"column", e.column}, {"b", num(e.b)},
                         {"se", num(e.se)},    {"p", num(e.p)},
                         {"converged", e.converged}, {"skipped", e.skipped}};
        if (!e.note.empty()) j["note"] = e.note;
        entries.push_back(std::move(j));
    }
    return {{"entries", entries}, {"selected", s.selected}};
}

inline nlohmann::json comparison_json(const stats::DpComparison& c) {
    return {{"with_dp", eval_json(c.with_dp)},
            {"without_dp", eval_json(c.without_dp)},
            {"dp_columns_present", c.dp_columns_present},
            {"lr_stat", num(c.lr_stat)},
            {"lr_df", c.lr_df},
            {"lr_p", num(c.lr_p)}};
}

}  // namespace detail

/// Everything the fit command learned about one horizon; serialized as one
/// JSON document so a rerun can be diffed byte for byte.
struct FitReport {
    std::string horizon;
    std::string profile;
    bool without_dp = false;
    int n_rows = 0;
    std::vector<std::string> skipped_eyes;
    int missing_outcomes = 0;
    stats::CleaningReport cleaning;
    std::vector<ColumnScreen> screening;
    stats::VifElimination vif;
    stats::ScreenResult univariate;
    stats::LogisticFit multivariate;
    std::vector<std::string> multivariate_columns;
    std::optional<stats::DpComparison> dp_comparison;
    stats::RocCurve roc;  ///< multivariate model, in-sample
    std::vector<std::string> notes;
};

inline nlohmann::json to_json(const FitReport& r) {
    nlohmann::json j{{"horizon", r.horizon},
                     {"profile", r.profile},
                     {"without_dp", r.without_dp},
                     {"n_rows", r.n_rows},
                     {"skipped_eyes", r.skipped_eyes},
                     {"missing_outcomes", r.missing_outcomes},
                     {"cleaning", detail::cleaning_json(r.cleaning)},
                     {"screening", detail::screening_json(r.screening)},
                     {"vif", detail::vif_json(r.vif)},
                     {"univariate", detail::screen_json(r.univariate)},
                     {"multivariate", detail::fit_json(r.multivariate)},
                     {"multivariate_columns", r.multivariate_columns},
                     {"roc_auc", detail::num(r.roc.auc)},
                     {"notes", r.notes}};
    if (r.dp_comparison) j["dp_comparison"] = detail::comparison_json(*r.dp_comparison);
    if (auto ctx = context_auc(parse_horizon(r.horizon)))
        j["context_reference_auc"] = *ctx;
    return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

/// ROC curve as CSV, threshold descending (as produced by the curve builder).
inline void write_roc_csv(std::ostream& out, const stats::RocCurve& roc) {
    out << "threshold,fpr,tpr\n";
    for (const auto& p : roc.points)
        out << core::csv::join({core::csv::format_double(p.threshold),
                                core::csv::format_double(p.fpr),
                                core::csv::format_double(p.tpr)})
            << '\n';
}

inline void write_roc_csv(const std::string& path, const stats::RocCurve& roc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_roc_csv(out, roc);
}

namespace detail {

/// Fixed-format coordinate: SVG readers want plain decimal, and two digits
/// past the point is below pixel resolution at this canvas size.
inline std::string svg_num(double v, const char* fmt = "%.2f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace detail

/// Standalone SVG of an ROC curve: unit square with the chance diagonal,
/// the curve polyline, and the AUC printed in the corner.
inline void write_roc_svg(std::ostream& out, const stats::RocCurve& roc,
                          const std::string& title) {
    const double size = 320.0, margin = 40.0;
    const double span = size - 2 * margin;
    auto px = [&](double fpr) { return margin + fpr * span; };
    auto py = [&](double tpr) { return size - margin - tpr * span; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"320\" "
           "viewBox=\"0 0 320 320\">\n";
    out << "  <rect x=\"" << detail::svg_num(margin) << "\" y=\"" << detail::svg_num(margin)
        << "\" width=\"" << detail::svg_num(span) << "\" height=\"" << detail::svg_num(span)
        << "\" fill=\"white\" stroke=\"#444\"/>\n";
    out << "  <line x1=\"" << detail::svg_num(px(0)) << "\" y1=\"" << detail::svg_num(py(0))
        << "\" x2=\"" << detail::svg_num(px(1)) << "\" y2=\"" << detail::svg_num(py(1))
        << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    out << "  <polyline fill=\"none\" stroke=\"#1a6baf\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < roc.points.size(); ++i) {
        if (i) out << ' ';
        out << detail::svg_num(px(roc.points[i].fpr)) << ','
            << detail::svg_num(py(roc.points[i].tpr));
    }
    out << "\"/>\n";
    out << "  <text x=\"" << detail::svg_num(margin) << "\" y=\"" << detail::svg_num(margin - 12)
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
    out << "  <text x=\"" << detail::svg_num(size - margin - 96) << "\" y=\""
        << detail::svg_num(size - margin - 10)
        << "\" font-family=\"sans-serif\" font-size=\"12\">AUC = "
        << detail::svg_num(roc.auc, "%.4f") << "</text>\n";
    out << "  <text x=\"" << detail::svg_num(size / 2 - 60) << "\" y=\""
        << detail::svg_num(size - 12)
        << "\" font-family=\"sans-serif\" font-size=\"11\">false positive rate</text>\n";
    out << "  <text x=\"14\" y=\"" << detail::svg_num(size / 2 + 50)
        << "\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 "
        << detail::svg_num(size / 2 + 50) << ")\">true positive rate</text>\n";
    out << "</svg>\n";
}

inline void write_roc_svg(const std::string& path, const stats::RocCurve& roc,
                          const std::string& title) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_roc_svg(out, roc, title);
}

/// Per-class segmentation quality table plus the unweighted mean row.
inline void write_segmetrics_csv(std::ostream& out, const segmetrics::MetricsReport& rep) {
    out << "class,dice,iou,accuracy,f1,roc_auc,support,auc_is_fallback\n";
    auto emit = [&](const std::string& name, const segmetrics::ClassMetrics& m) {
        out << core::csv::join({name, core::csv::format_double(m.dice),
                                core::csv::format_double(m.iou),
                                core::csv::format_double(m.accuracy),
                                core::csv::format_double(m.f1),
                                core::csv::format_double(m.roc_auc),
                                std::to_string(m.support), m.auc_is_fallback ? "1" : "0"})
            << '\n';
    };
    for (const auto& m : rep.per_class) emit(core::to_string(m.cls), m);
    emit("Mean", rep.mean);
}

inline void write_segmetrics_csv(const std::string& path,
                                 const segmetrics::MetricsReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_segmetrics_csv(out, rep);
}

/// Ablation-grid report for the fusion harness at one horizon.
inline nlohmann::json to_json(const fusion::HarnessReport& rep, const std::string& horizon) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        nlohmann::json roc_points = nlohmann::json::array();
        for (const auto& p : r.roc.points)
            roc_points.push_back({{"threshold", detail::num(p.threshold)},
                                  {"fpr", detail::num(p.fpr)},
                                  {"tpr", detail::num(p.tpr)}});
        rows.push_back({{"modality", fusion::to_string(r.modality)},
                        {"with_dp", r.with_dp},
                        {"chosen_lr", detail::num(r.chosen_lr)},
                        {"cv_auc", detail::num(r.cv_auc)},
                        {"test_auc", detail::num(r.test_auc)},
                        {"test_accuracy", detail::num(r.test_accuracy)},
                        {"test_sensitivity", detail::num(r.test_sensitivity)},
                        {"test_specificity", detail::num(r.test_specificity)},
                        {"roc", {{"auc", detail::num(r.roc.auc)}, {"points", roc_points}}}});
    }
    nlohmann::json j{{"horizon", horizon},
                     {"n_train", rep.n_train},
                     {"n_test", rep.n_test},
                     {"rows", rows}};
    if (rep.context_reference_auc) j["context_reference_auc"] = *rep.context_reference_auc;
    return j;
}

}  // namespace mhquant::pipeline
