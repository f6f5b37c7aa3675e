#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mhquant/core/records.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/morphometry/band_defect.hpp"
#include "mhquant/morphometry/composite.hpp"
#include "mhquant/morphometry/hole_geometry.hpp"
#include "mhquant/morphometry/qualitative.hpp"
#include "mhquant/morphometry/shape.hpp"

namespace mhquant::morphometry {

/// Everything measured on one scan, kept for auditing how the combined
/// feature vector came about.
struct ScanMeasurements {
    core::Orientation orientation = core::Orientation::Horizontal;
    HoleGeometry geometry;
    BandDefectMeasurement elm;
    BandDefectMeasurement ez;
    QualitativeFlags quals;
    std::optional<double> hole_circularity;  ///< of the measured hole component
    std::optional<double> cyst_circularity;  ///< of the largest pseudocyst component
};

/// One recovery-rate result (filled in by the dynamics module).
struct RecoveryRateValue {
    double rate = 0.0;          ///< preop size / resolution day; 0 when censored
    double weighted = 0.0;      ///< rate * shape weight
    double shape_weight = 1.0;
    bool censored = false;      ///< never fell below epsilon during follow-up
    bool degenerate = false;    ///< lesion already absent preoperatively
    std::optional<int> resolution_day;
};

/// Recovery rates for the four tracked lesions; unset until derive_dynamics
/// has run over the eye's longitudinal series.
struct DynamicParams {
    std::optional<RecoveryRateValue> hole;
    std::optional<RecoveryRateValue> cyst;
    std::optional<RecoveryRateValue> elm;
    std::optional<RecoveryRateValue> ez;

    bool any() const { return hole || cyst || elm || ez; }
};

/// Per-(eye, stage) morphometry combined across the available scans.
///
/// Scalar measurements are the arithmetic mean over the scans on which they
/// are meaningful (hole metrics over scans with a hole, band defects over
/// scans where the band exists); presence flags combine by OR. Composite
/// indices are computed from the combined scalars, so mhi == thi * dhi holds
/// exactly. Hole/band scalars are 0 with their presence flag false when the
/// structure shows on no scan at all.
struct FeatureVector {
    std::string eye_id;
    core::Stage stage = core::Stage::PRE;

    bool hole_present = false;
    double mld_um = 0.0, bd_um = 0.0, e_um = 0.0, height_um = 0.0;
    double hole_area_um2 = 0.0;
    double pseudocyst_area_um2 = 0.0;

    bool elm_band_present = false, ez_band_present = false;
    double elm_defect_um = 0.0, ez_defect_um = 0.0;

    CompositeIndices composites;

    bool erm_present = false;
    bool traction_space_present = false;

    std::optional<double> hole_circularity;
    std::optional<double> cyst_circularity;

    DynamicParams dyn;

    std::vector<ScanMeasurements> per_scan;
};

inline ScanMeasurements measure_scan(const core::LabeledScan& scan,
                                     int qualitative_min_pixels) {
    ScanMeasurements m;
    m.orientation = scan.orientation();
    m.geometry = measure_hole(scan);
    m.elm = measure_band_defect(scan, core::ClassLabel::ELM);
    m.ez = measure_band_defect(scan, core::ClassLabel::EZ);
    m.quals = qualitative_flags(scan, qualitative_min_pixels);
    if (m.geometry.hole_present) {
        const auto regions = connected_components_4(scan, core::ClassLabel::MacularHole);
        m.hole_circularity = circularity(*largest_region(regions), scan.spacing());
    }
    const auto cysts = connected_components_4(scan, core::ClassLabel::Pseudocysts);
    if (const PixelRegion* r = largest_region(cysts))
        m.cyst_circularity = circularity(*r, scan.spacing());
    return m;
}

/// Extracts the combined feature vector for one visit. Both scans are used
/// when attached; a record with no decoded scan at all is an error.
inline FeatureVector extract_features(const core::StudyRecord& rec,
                                      int qualitative_min_pixels = 10) {
    if (!rec.has_any_scan())
        throw NoScansError(rec.eye_id, core::to_string(rec.stage));

    FeatureVector f;
    f.eye_id = rec.eye_id;
    f.stage = rec.stage;
    if (rec.scan_h) f.per_scan.push_back(measure_scan(*rec.scan_h, qualitative_min_pixels));
    if (rec.scan_v) f.per_scan.push_back(measure_scan(*rec.scan_v, qualitative_min_pixels));

    // Mean over the entries where the value is meaningful; `pick` selects the
    // value, `use` says whether this scan contributes.
    auto mean_where = [&](auto use, auto pick) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const auto& m : f.per_scan) {
            if (!use(m)) continue;
            sum += pick(m);
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    auto with_hole = [](const ScanMeasurements& m) { return m.geometry.hole_present; };

    if (auto v = mean_where(with_hole, [](const auto& m) { return m.geometry.mld_um; })) {
        f.hole_present = true;
        f.mld_um = *v;
        f.bd_um = *mean_where(with_hole, [](const auto& m) { return m.geometry.bd_um; });
        f.e_um = *mean_where(with_hole, [](const auto& m) { return m.geometry.e_um; });
        f.height_um = *mean_where(with_hole, [](const auto& m) { return m.geometry.height_um; });
        f.hole_area_um2 =
            *mean_where(with_hole, [](const auto& m) { return m.geometry.hole_area_um2; });
    }
    f.pseudocyst_area_um2 = *mean_where([](const auto&) { return true; },
                                        [](const auto& m) { return m.geometry.pseudocyst_area_um2; });

    if (auto v = mean_where([](const auto& m) { return m.elm.band_present; },
                            [](const auto& m) { return m.elm.defect_um; })) {
        f.elm_band_present = true;
        f.elm_defect_um = *v;
    }
    if (auto v = mean_where([](const auto& m) { return m.ez.band_present; },
                            [](const auto& m) { return m.ez.defect_um; })) {
        f.ez_band_present = true;
        f.ez_defect_um = *v;
    }

    for (const auto& m : f.per_scan) {
        f.erm_present = f.erm_present || m.quals.erm_present;
        f.traction_space_present = f.traction_space_present || m.quals.traction_space_present;
    }

    f.hole_circularity = mean_where([](const auto& m) { return m.hole_circularity.has_value(); },
                                    [](const auto& m) { return *m.hole_circularity; });
    f.cyst_circularity = mean_where([](const auto& m) { return m.cyst_circularity.has_value(); },
                                    [](const auto& m) { return *m.cyst_circularity; });

    HoleGeometry combined;
    combined.hole_present = f.hole_present;
    combined.mld_um = f.mld_um;
    combined.bd_um = f.bd_um;
    combined.height_um = f.height_um;
    combined.hole_area_um2 = f.hole_area_um2;
    combined.pseudocyst_area_um2 = f.pseudocyst_area_um2;
    f.composites = composite_indices(combined);
    return f;
}

}  // namespace mhquant::morphometry
