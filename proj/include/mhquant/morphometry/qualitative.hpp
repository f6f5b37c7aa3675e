#pragma once

#include "mhquant/core/scan.hpp"

namespace mhquant::morphometry {

/// Presence flags for epiretinal membrane and subretinal/traction space.
/// A class counts as present only when it covers at least `min_pixels`
/// pixels, which suppresses single-pixel segmentation speckle.
struct QualitativeFlags {
    bool erm_present = false;
    bool traction_space_present = false;
};

inline QualitativeFlags qualitative_flags(const core::LabeledScan& scan, int min_pixels = 10) {
    QualitativeFlags q;
    q.erm_present = scan.count(core::ClassLabel::ERM) >= static_cast<std::size_t>(min_pixels);
    q.traction_space_present =
        scan.count(core::ClassLabel::Space) >= static_cast<std::size_t>(min_pixels);
    return q;
}

}  // namespace mhquant::morphometry
