#pragma once

#include <map>
#include <optional>

#include "mhquant/core/stage.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::dynamics {

/// The four lesion sizes tracked longitudinally.
enum class LesionKind { HoleArea, CystArea, ElmDefect, EzDefect };

inline const char* to_string(LesionKind k) {
    switch (k) {
        case LesionKind::HoleArea:  return "hole_area";
        case LesionKind::CystArea:  return "cyst_area";
        case LesionKind::ElmDefect: return "elm_defect";
        case LesionKind::EzDefect:  return "ez_defect";
    }
    return "?";
}

/// Lesion size per stage. Stages without a measurement are simply absent;
/// they neither resolve nor censor the trajectory.
struct LesionTrajectory {
    LesionKind kind = LesionKind::HoleArea;
    std::map<core::Stage, double> values;
};

/// Where (and whether) a trajectory first falls to or below epsilon.
struct ResolutionOutcome {
    bool resolved = false;    ///< false = censored: never at/below epsilon
    bool degenerate = false;  ///< lesion was already at/below epsilon preoperatively
    std::optional<core::Stage> stage;
    std::optional<int> day;
};

/// Finds the earliest postoperative stage whose size is <= epsilon.
///
/// A lesion that is already absent at baseline has nothing to recover; it is
/// flagged degenerate and nominally "resolves" at the first postoperative
/// visit on record (or stays censored if there is none). A baseline
/// measurement is mandatory.
inline ResolutionOutcome resolution_day(const LesionTrajectory& traj,
                                        const core::StageDayMap& days,
                                        double epsilon = 0.0) {
    auto pre = traj.values.find(core::Stage::PRE);
    if (pre == traj.values.end())
        throw MissingBaselineError(std::string(to_string(traj.kind)) + " at PRE");

    ResolutionOutcome out;
    if (pre->second <= epsilon) {
        out.degenerate = true;
        for (auto it = std::next(traj.values.begin()); it != traj.values.end(); ++it) {
            out.resolved = true;
            out.stage = it->first;
            out.day = days.day(it->first);
            break;
        }
        return out;
    }
    for (auto it = std::next(traj.values.begin()); it != traj.values.end(); ++it) {
        if (it->second <= epsilon) {
            out.resolved = true;
            out.stage = it->first;
            out.day = days.day(it->first);
            return out;
        }
    }
    return out;  // censored
}

}  // namespace mhquant::dynamics
