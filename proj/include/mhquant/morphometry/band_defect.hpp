#pragma once

#include <stdexcept>
#include <vector>

#include "mhquant/core/scan.hpp"

namespace mhquant::morphometry {

/// Defect length of an outer-retinal band (ELM or EZ) on one scan.
///
/// The band is projected onto columns; its support is the column range from
/// its leftmost to its rightmost pixel. The defect is the longest run of
/// empty columns strictly inside that support — gaps hanging off either edge
/// of the support belong to the image border, not to the band. A scan without
/// any band pixels reports 0 with band_present = false.
struct BandDefectMeasurement {
    bool band_present = false;
    double defect_um = 0.0;
    int defect_px = 0;         ///< defect length in columns
    int support_min_col = -1;  ///< leftmost band column (-1 when absent)
    int support_max_col = -1;  ///< rightmost band column
};

inline BandDefectMeasurement measure_band_defect(const core::LabeledScan& scan,
                                                 core::ClassLabel band) {
    if (band != core::ClassLabel::ELM && band != core::ClassLabel::EZ)
        throw std::invalid_argument("measure_band_defect expects ELM or EZ");

    const int w = scan.width();
    const int h = scan.height();
    std::vector<char> occupied(w, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (scan.at(x, y) == band) occupied[x] = 1;

    BandDefectMeasurement m;
    int lo = -1, hi = -1;
    for (int x = 0; x < w; ++x) {
        if (occupied[x]) {
            if (lo < 0) lo = x;
            hi = x;
        }
    }
    if (lo < 0) return m;

    m.band_present = true;
    m.support_min_col = lo;
    m.support_max_col = hi;
    int longest = 0, run = 0;
    for (int x = lo; x <= hi; ++x) {
        if (occupied[x]) {
            longest = std::max(longest, run);
            run = 0;
        } else {
            ++run;
        }
    }
    // No trailing run: the support ends on an occupied column by definition.
    m.defect_px = longest;
    m.defect_um = longest * scan.spacing().um_per_px_x;
    return m;
}

}  // namespace mhquant::morphometry
