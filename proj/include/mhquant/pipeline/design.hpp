#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhquant/core/manifest.hpp"
#include "mhquant/dynamics/recovery.hpp"
#include "mhquant/pipeline/feature_table.hpp"
#include "mhquant/pipeline/run_config.hpp"
#include "mhquant/stats/compare.hpp"
#include "mhquant/stats/data_matrix.hpp"

namespace mhquant::pipeline {

/// Design matrix for one horizon plus bookkeeping about what went in.
struct DesignResult {
    stats::DataMatrix matrix;
    std::vector<std::string> dp_columns;       ///< dynamic columns present (model names)
    std::vector<std::string> skipped_eyes;     ///< eyes without a usable PRE feature row
    int missing_outcomes = 0;                  ///< rows kept with no outcome label
};

namespace detail {

inline dynamics::DynamicsOptions dynamics_options(const RunConfig& cfg) {
    dynamics::DynamicsOptions opt;
    opt.days = cfg.days;
    opt.epsilon_hole = cfg.epsilon_hole;
    opt.epsilon_cyst = cfg.epsilon_cyst;
    opt.epsilon_elm = cfg.epsilon_elm;
    opt.epsilon_ez = cfg.epsilon_ez;
    opt.lambda = cfg.lambda;
    return opt;
}

/// Recovery rates for one eye from its per-stage features. Truncated wiring
/// discards visits after the horizon before resolving, so a lesion that
/// first disappears later counts as censored for this horizon's model.
inline morphometry::DynamicParams eye_dynamics(
    const std::map<core::Stage, morphometry::FeatureVector>& stages, core::Stage horizon,
    const RunConfig& cfg) {
    std::map<core::Stage, morphometry::FeatureVector> working = stages;
    if (cfg.dp_wiring == DpWiring::TruncatedAtHorizon)
        for (auto it = working.begin(); it != working.end();)
            it = it->first > horizon ? working.erase(it) : std::next(it);
    dynamics::derive_dynamics(working, dynamics_options(cfg));
    return working.at(core::Stage::PRE).dyn;
}

inline void push_rate(std::vector<std::optional<double>>& row,
                      const std::optional<morphometry::RecoveryRateValue>& r) {
    if (r) {
        row.push_back(r->weighted);
        row.push_back(r->censored ? 1.0 : 0.0);
    } else {
        row.push_back(std::nullopt);
        row.push_back(std::nullopt);
    }
}

}  // namespace detail

/// Assembles the outcome-model matrix for one horizon: clinical covariates
/// from the manifest's PRE visit, baseline morphometry, the horizon's band
/// defects, and (unless suppressed) the dynamic recovery-rate block. One
/// row per eye that has a PRE feature row; outcome labels attach where both
/// BCVA readings exist, and rows without one are left for the cleaning step
/// to drop and count.
inline DesignResult assemble_design(const FeatureTable& table, const core::Manifest& manifest,
                                    core::Stage horizon, const RunConfig& cfg,
                                    bool without_dp = false) {
    if (!core::is_postoperative(horizon)) throw ConfigError("PRE is not a horizon");
    const auto by_eye = group_by_eye(table);
    const std::string hz = horizon_name(horizon);

    DesignResult out;
    auto& m = out.matrix;
    for (const auto& c : manifest.clinical_columns) m.columns.push_back(c);
    const std::vector<std::string> base_cols = {
        "mld_um", "bd_um", "e_um", "height_um", "hole_area_um2", "pseudocyst_area_um2",
        "elm_defect_um", "ez_defect_um", "mhi", "thi", "dhi", "area_ratio",
        "erm_present", "traction_space_present",
    };
    for (const auto& c : base_cols) m.columns.push_back(c);
    m.columns.push_back(hz + "_elm_defect_um");
    m.columns.push_back(hz + "_ez_defect_um");
    if (!without_dp) {
        out.dp_columns = stats::dynamic_parameter_columns();
        for (const auto& c : out.dp_columns) m.columns.push_back(c);
    }

    for (const auto& series : manifest.series) {
        const auto eye_it = by_eye.find(series.eye_id);
        if (eye_it == by_eye.end() ||
            eye_it->second.find(core::Stage::PRE) == eye_it->second.end()) {
            out.skipped_eyes.push_back(series.eye_id);
            continue;
        }
        const auto& stages = eye_it->second;
        const auto& pre = stages.at(core::Stage::PRE);

        std::vector<std::optional<double>> row;
        const core::StudyRecord* pre_rec = series.find(core::Stage::PRE);
        for (const auto& c : manifest.clinical_columns) {
            std::optional<double> v;
            if (pre_rec) {
                auto it = pre_rec->clinical.find(c);
                if (it != pre_rec->clinical.end()) v = it->second;
            }
            row.push_back(v);
        }

        auto opt_if = [](bool present, double v) {
            return present ? std::optional<double>(v) : std::nullopt;
        };
        row.push_back(opt_if(pre.hole_present, pre.mld_um));
        row.push_back(opt_if(pre.hole_present, pre.bd_um));
        row.push_back(opt_if(pre.hole_present, pre.e_um));
        row.push_back(opt_if(pre.hole_present, pre.height_um));
        row.push_back(pre.hole_area_um2);
        row.push_back(pre.pseudocyst_area_um2);
        row.push_back(pre.elm_defect_um);
        row.push_back(pre.ez_defect_um);
        row.push_back(pre.composites.mhi);
        row.push_back(pre.composites.thi);
        row.push_back(pre.composites.dhi);
        row.push_back(pre.composites.area_ratio);
        row.push_back(pre.erm_present ? 1.0 : 0.0);
        row.push_back(pre.traction_space_present ? 1.0 : 0.0);

        const auto hz_it = stages.find(horizon);
        if (hz_it != stages.end()) {
            row.push_back(hz_it->second.elm_defect_um);
            row.push_back(hz_it->second.ez_defect_um);
        } else {
            row.push_back(std::nullopt);
            row.push_back(std::nullopt);
        }

        if (!without_dp) {
            const auto dyn = detail::eye_dynamics(stages, horizon, cfg);
            detail::push_rate(row, dyn.hole);
            detail::push_rate(row, dyn.cyst);
            detail::push_rate(row, dyn.elm);
            detail::push_rate(row, dyn.ez);
        }

        std::optional<core::OutcomeLabel> label;
        const core::StudyRecord* hz_rec = series.find(horizon);
        if (pre_rec && hz_rec && pre_rec->bcva_etdrs && hz_rec->bcva_etdrs)
            label = core::outcome_label(*pre_rec, *hz_rec, cfg.superior_threshold);
        else
            ++out.missing_outcomes;

        m.rows.push_back(std::move(row));
        m.outcomes.push_back(label);
        m.row_ids.push_back(series.eye_id);
    }
    if (m.rows.empty()) throw EmptyInputError("assemble_design: no usable eyes");
    return out;
}

}  // namespace mhquant::pipeline
