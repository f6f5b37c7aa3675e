#pragma once

#include <optional>

#include "mhquant/morphometry/hole_geometry.hpp"

namespace mhquant::morphometry {

/// Dimensionless shape indices derived from hole geometry. Each index is
/// absent when its denominator is zero — an undefined ratio is never
/// serialized as 0 or NaN.
struct CompositeIndices {
    std::optional<double> mhi;         ///< height / base diameter
    std::optional<double> thi;         ///< height / MLD
    std::optional<double> dhi;         ///< MLD / base diameter
    std::optional<double> area_ratio;  ///< hole area / pseudocyst area
};

/// Computes the indices from already-combined geometry, so the identity
/// mhi == thi * dhi holds exactly whenever all three are defined.
inline CompositeIndices composite_indices(const HoleGeometry& g) {
    CompositeIndices c;
    if (g.bd_um > 0.0) c.mhi = g.height_um / g.bd_um;
    if (g.mld_um > 0.0) c.thi = g.height_um / g.mld_um;
    if (g.bd_um > 0.0 && g.mld_um > 0.0) c.dhi = g.mld_um / g.bd_um;
    if (g.pseudocyst_area_um2 > 0.0) c.area_ratio = g.hole_area_um2 / g.pseudocyst_area_um2;
    return c;
}

}  // namespace mhquant::morphometry
