#pragma once

#include <utility>
#include <vector>

#include "mhquant/core/scan.hpp"

namespace mhquant::morphometry {

/// One 4-connected component of a single class. Pixels are stored in scan
/// order (row by row, left to right), which all downstream consumers rely on
/// for determinism.
struct PixelRegion {
    std::vector<std::pair<int, int>> pixels;  ///< (x, y)
    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;

    std::size_t size() const { return pixels.size(); }
};

/// Finds all 4-connected components of `cls`, in scan order of their first
/// pixel. Diagonal contact does not connect.
inline std::vector<PixelRegion> connected_components_4(const core::LabeledScan& scan,
                                                       core::ClassLabel cls) {
    const int w = scan.width();
    const int h = scan.height();
    std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
    std::vector<PixelRegion> regions;
    std::vector<std::pair<int, int>> stack;

    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (visited[i0] || scan.at(x0, y0) != cls) continue;

            PixelRegion region;
            region.min_x = region.max_x = x0;
            region.min_y = region.max_y = y0;
            visited[i0] = 1;
            stack.clear();
            stack.emplace_back(x0, y0);
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                region.pixels.emplace_back(x, y);
                region.min_x = std::min(region.min_x, x);
                region.max_x = std::max(region.max_x, x);
                region.min_y = std::min(region.min_y, y);
                region.max_y = std::max(region.max_y, y);
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const std::size_t i = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (!visited[i] && scan.at(nx[k], ny[k]) == cls) {
                        visited[i] = 1;
                        stack.emplace_back(nx[k], ny[k]);
                    }
                }
            }
            // Depth-first traversal emits pixels in an implementation-defined
            // order; restore scan order so callers see a canonical layout.
            std::sort(region.pixels.begin(), region.pixels.end(),
                      [](const auto& a, const auto& b) {
                          return a.second != b.second ? a.second < b.second
                                                      : a.first < b.first;
                      });
            regions.push_back(std::move(region));
        }
    }
    return regions;
}

/// Largest component by pixel count; ties resolve to the earliest in scan
/// order. Returns nullptr-like empty optional when the class is absent.
inline const PixelRegion* largest_region(const std::vector<PixelRegion>& regions) {
    const PixelRegion* best = nullptr;
    for (const auto& r : regions)
        if (!best || r.size() > best->size()) best = &r;
    return best;
}

}  // namespace mhquant::morphometry
