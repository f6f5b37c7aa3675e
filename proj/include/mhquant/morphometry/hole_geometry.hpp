#pragma once

#include <cstdlib>
#include <map>

#include "mhquant/core/scan.hpp"
#include "mhquant/morphometry/connected_components.hpp"

namespace mhquant::morphometry {

/// Linear and area measurements of the macular hole on one B-scan.
///
/// Pixel-level integers are kept alongside the micrometre values so callers
/// (and tests) can verify the raw counts independently of spacing. When no
/// hole pixels exist everything is zero and hole_present is false; an absent
/// hole is a value, not an error.
struct HoleGeometry {
    bool hole_present = false;

    double mld_um = 0.0;       ///< minimum linear diameter (narrowest row width)
    double bd_um = 0.0;        ///< base diameter (width at the bottom-most row)
    double e_um = 0.0;         ///< vertical offset between the MLD row and the base row
    double height_um = 0.0;    ///< full row span of the hole
    double hole_area_um2 = 0.0;
    double pseudocyst_area_um2 = 0.0;

    int mld_px = 0;
    int bd_px = 0;
    int e_px = 0;
    int height_px = 0;
    long long hole_area_px = 0;
    long long cyst_area_px = 0;

    int mld_row = -1;   ///< row index where the MLD was taken
    int base_row = -1;  ///< bottom-most row of the hole component
};

/// Measures hole geometry on a single scan.
///
/// The hole is the largest 4-connected MacularHole component (ties resolve to
/// the earliest in scan order). Row widths are full extents
/// (rightmost - leftmost + 1), so a row with interior gaps still measures its
/// outer span. The base is the bottom-most row; MLD is the minimum row width,
/// with ties resolved to the row closest to the base. Pseudocyst area counts
/// every Pseudocysts pixel on the scan, not just one component.
inline HoleGeometry measure_hole(const core::LabeledScan& scan) {
    const core::PixelSpacing& sp = scan.spacing();
    HoleGeometry g;
    g.cyst_area_px = static_cast<long long>(scan.count(core::ClassLabel::Pseudocysts));
    g.pseudocyst_area_um2 = static_cast<double>(g.cyst_area_px) * sp.um_per_px_x * sp.um_per_px_y;

    const auto regions = connected_components_4(scan, core::ClassLabel::MacularHole);
    const PixelRegion* hole = largest_region(regions);
    if (!hole) return g;

    g.hole_present = true;
    g.hole_area_px = static_cast<long long>(hole->size());
    g.hole_area_um2 = static_cast<double>(g.hole_area_px) * sp.um_per_px_x * sp.um_per_px_y;
    g.height_px = hole->max_y - hole->min_y + 1;
    g.height_um = g.height_px * sp.um_per_px_y;
    g.base_row = hole->max_y;

    // Per-row extents of the component.
    std::map<int, std::pair<int, int>> row_extent;  // y -> (left, right)
    for (auto [x, y] : hole->pixels) {
        auto [it, inserted] = row_extent.try_emplace(y, x, x);
        if (!inserted) {
            it->second.first = std::min(it->second.first, x);
            it->second.second = std::max(it->second.second, x);
        }
    }

    g.bd_px = row_extent.at(g.base_row).second - row_extent.at(g.base_row).first + 1;
    g.bd_um = g.bd_px * sp.um_per_px_x;

    int best_width = -1;
    int best_row = -1;
    for (const auto& [y, ext] : row_extent) {
        const int width = ext.second - ext.first + 1;
        const bool better =
            best_width < 0 || width < best_width ||
            (width == best_width && std::abs(y - g.base_row) < std::abs(best_row - g.base_row));
        if (better) {
            best_width = width;
            best_row = y;
        }
    }
    g.mld_px = best_width;
    g.mld_um = g.mld_px * sp.um_per_px_x;
    g.mld_row = best_row;
    g.e_px = std::abs(best_row - g.base_row);
    g.e_um = g.e_px * sp.um_per_px_y;
    return g;
}

}  // namespace mhquant::morphometry
