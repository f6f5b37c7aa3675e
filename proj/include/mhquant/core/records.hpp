#pragma once

#include <map>
#include <optional>
#include <string>

#include "mhquant/core/scan.hpp"
#include "mhquant/core/stage.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::core {

/// One (eye, stage) visit: clinical measurements plus references to the
/// segmented scans acquired at that visit. Scan paths are kept as written in
/// the manifest; the decoded scans are attached separately once loaded.
struct StudyRecord {
    std::string eye_id;
    Stage stage = Stage::PRE;

    /// Best-corrected visual acuity in ETDRS letters, 0..100. Absent when the
    /// manifest cell was empty.
    std::optional<int> bcva_etdrs;

    /// Additional numeric clinical variables keyed by manifest column name
    /// (e.g. duration_days, age). A present key with an empty optional means
    /// the cell existed but was blank.
    std::map<std::string, std::optional<double>> clinical;

    std::string scan_h_path;  ///< empty when the manifest row had no horizontal scan
    std::string scan_v_path;  ///< empty when the manifest row had no vertical scan

    /// Per-row pixel-spacing overrides; fields left unset fall back to the
    /// run-wide default spacing.
    std::optional<double> spacing_x_override;
    std::optional<double> spacing_y_override;

    PixelSpacing effective_spacing(const PixelSpacing& run_default) const {
        return {spacing_x_override.value_or(run_default.um_per_px_x),
                spacing_y_override.value_or(run_default.um_per_px_y)};
    }

    std::optional<LabeledScan> scan_h;
    std::optional<LabeledScan> scan_v;

    bool has_any_scan_path() const { return !scan_h_path.empty() || !scan_v_path.empty(); }
    bool has_any_scan() const { return scan_h.has_value() || scan_v.has_value(); }
};

/// All visits of one eye, keyed by stage. Stages may be missing; the map
/// guarantees at most one record per stage.
struct LongitudinalSeries {
    std::string eye_id;
    std::map<Stage, StudyRecord> records;

    const StudyRecord* find(Stage s) const {
        auto it = records.find(s);
        return it == records.end() ? nullptr : &it->second;
    }
};

/// Binary surgical outcome derived from BCVA change.
enum class Outcome { NotSuperior = 0, Superior = 1 };

inline const char* to_string(Outcome o) {
    return o == Outcome::Superior ? "Superior" : "NotSuperior";
}

struct OutcomeLabel {
    Outcome value = Outcome::NotSuperior;
    int delta_letters = 0;  ///< postoperative minus preoperative BCVA
};

/// Labels an eye Superior when BCVA gained at least `threshold_letters`
/// between the preoperative visit and the given postoperative visit.
inline OutcomeLabel outcome_label(const StudyRecord& pre, const StudyRecord& post,
                                  int threshold_letters = 20) {
    if (!pre.bcva_etdrs) throw MissingBcvaError(to_string(pre.stage));
    if (!post.bcva_etdrs) throw MissingBcvaError(to_string(post.stage));
    OutcomeLabel out;
    out.delta_letters = *post.bcva_etdrs - *pre.bcva_etdrs;
    out.value = out.delta_letters >= threshold_letters ? Outcome::Superior
                                                       : Outcome::NotSuperior;
    return out;
}

}  // namespace mhquant::core
