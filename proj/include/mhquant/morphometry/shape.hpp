#pragma once

#include <algorithm>
#include <unordered_set>

#include "mhquant/core/scan.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/morphometry/connected_components.hpp"

namespace mhquant::morphometry {

/// Physical perimeter of a pixel region: the total length of pixel edges
/// exposed to the outside under 4-connectivity. Horizontal edges (top/bottom
/// of a pixel) have length um_per_px_x, vertical edges (left/right) have
/// length um_per_px_y. Holes inside the region count as exposed boundary.
inline double physical_perimeter_um(const PixelRegion& region,
                                    const core::PixelSpacing& sp) {
    if (region.pixels.empty()) throw EmptyComponentError();
    auto key = [](int x, int y) {
        return (static_cast<long long>(y) << 32) | static_cast<unsigned>(x);
    };
    std::unordered_set<long long> in;
    in.reserve(region.pixels.size() * 2);
    for (auto [x, y] : region.pixels) in.insert(key(x, y));

    double perim = 0.0;
    for (auto [x, y] : region.pixels) {
        if (!in.count(key(x, y - 1))) perim += sp.um_per_px_x;  // top
        if (!in.count(key(x, y + 1))) perim += sp.um_per_px_x;  // bottom
        if (!in.count(key(x - 1, y))) perim += sp.um_per_px_y;  // left
        if (!in.count(key(x + 1, y))) perim += sp.um_per_px_y;  // right
    }
    return perim;
}

/// Isoperimetric circularity 4*pi*A / P^2, clamped into (0, 1]. A disc
/// approaches 1; ragged or elongated shapes fall toward 0. On a pixel grid
/// the measured perimeter of even an ideal disc exceeds the smooth value, so
/// raw results land below 1 and the clamp only guards rounding.
inline double circularity(const PixelRegion& region, const core::PixelSpacing& sp) {
    if (region.pixels.empty()) throw EmptyComponentError();
    const double area =
        static_cast<double>(region.pixels.size()) * sp.um_per_px_x * sp.um_per_px_y;
    const double perim = physical_perimeter_um(region, sp);
    const double c = 4.0 * 3.141592653589793 * area / (perim * perim);
    return std::clamp(c, 1e-12, 1.0);
}

}  // namespace mhquant::morphometry
