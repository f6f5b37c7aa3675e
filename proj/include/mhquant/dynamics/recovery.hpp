#pragma once

#include <map>

#include "mhquant/dynamics/trajectory.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/morphometry/features.hpp"

namespace mhquant::dynamics {

/// Recovery rate: preoperative lesion size divided by days to resolution.
/// Units are size-units per day (um^2/day for areas, um/day for defects).
inline double recovery_rate(double initial_size, int resolution_day) {
    if (resolution_day <= 0) throw ZeroDayError();
    return initial_size / resolution_day;
}

/// Shape weight 1 + lambda * (1 - circularity): compact lesions keep their
/// raw rate, ragged ones get boosted. lambda = 0 switches weighting off.
inline double shape_weight(double circularity, double lambda) {
    if (!(circularity > 0.0) || circularity > 1.0)
        throw Error("circularity must lie in (0, 1]");
    if (lambda < 0.0) throw Error("shape-weight lambda must be non-negative");
    return 1.0 + lambda * (1.0 - circularity);
}

struct DynamicsOptions {
    core::StageDayMap days;
    /// Resolution thresholds, in the unit of the respective lesion size.
    double epsilon_hole = 0.0;
    double epsilon_cyst = 0.0;
    double epsilon_elm = 0.0;
    double epsilon_ez = 0.0;
    /// Shape-weight strength; 0 disables weighting entirely.
    double lambda = 0.0;
};

namespace detail {

inline morphometry::RecoveryRateValue rate_for(const LesionTrajectory& traj,
                                               const DynamicsOptions& opt, double epsilon,
                                               double weight) {
    morphometry::RecoveryRateValue r;
    r.shape_weight = weight;
    const ResolutionOutcome res = resolution_day(traj, opt.days, epsilon);
    r.degenerate = res.degenerate;
    if (!res.resolved) {
        // Censored: the lesion never resolved during follow-up. It
        // contributes a zero rate rather than dropping out of the models; the
        // flag travels alongside so downstream fits can tell 0 apart from
        // "resolved instantly".
        r.censored = true;
        return r;
    }
    r.resolution_day = res.day;
    r.rate = recovery_rate(traj.values.at(core::Stage::PRE), *res.day);
    r.weighted = r.rate * weight;
    return r;
}

}  // namespace detail

/// Fills the dynamic parameters of the PRE feature vector from the eye's
/// longitudinal measurements. Stages missing from the map are skipped; the
/// PRE entry itself is required. Shape weights come from the preoperative
/// lesion shape and only apply to the two area lesions — a 1-D band defect
/// has no meaningful circularity, so band rates always carry weight 1.
inline void derive_dynamics(std::map<core::Stage, morphometry::FeatureVector>& by_stage,
                            const DynamicsOptions& opt) {
    opt.days.validate();
    auto pre_it = by_stage.find(core::Stage::PRE);
    if (pre_it == by_stage.end()) throw MissingBaselineError("feature vector at PRE");
    morphometry::FeatureVector& pre = pre_it->second;

    auto build = [&](LesionKind kind, auto select) {
        LesionTrajectory traj;
        traj.kind = kind;
        for (const auto& [stage, fv] : by_stage) traj.values[stage] = select(fv);
        return traj;
    };
    auto weight_of = [&](const std::optional<double>& circ) {
        if (opt.lambda == 0.0 || !circ) return 1.0;
        return shape_weight(*circ, opt.lambda);
    };

    pre.dyn.hole = detail::rate_for(
        build(LesionKind::HoleArea, [](const auto& f) { return f.hole_area_um2; }), opt,
        opt.epsilon_hole, weight_of(pre.hole_circularity));
    pre.dyn.cyst = detail::rate_for(
        build(LesionKind::CystArea, [](const auto& f) { return f.pseudocyst_area_um2; }), opt,
        opt.epsilon_cyst, weight_of(pre.cyst_circularity));
    pre.dyn.elm = detail::rate_for(
        build(LesionKind::ElmDefect, [](const auto& f) { return f.elm_defect_um; }), opt,
        opt.epsilon_elm, 1.0);
    pre.dyn.ez = detail::rate_for(
        build(LesionKind::EzDefect, [](const auto& f) { return f.ez_defect_um; }), opt,
        opt.epsilon_ez, 1.0);
}

}  // namespace mhquant::dynamics
