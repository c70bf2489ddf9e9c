#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uwind/field.hpp"

namespace uwind {

/// Axis-aligned box around one building, ground-mounted (z from 0).
struct Subdomain {
    int index = 0;  ///< 1-based, ordered by decreasing height
    Box box;
};

/// The three default subdomains: 2L x 2L cross-sections centered on the
/// building columns, heights 5L, 4L, 3L from tallest to shortest building.
inline std::vector<Subdomain> default_subdomains(double L) {
    if (!(L > 0.0)) throw config_error("default_subdomains: L must be > 0");
    const double half = L;  // 2L x 2L cross-section
    struct Column {
        double cx, cy, height;
    };
    const Column cols[3] = {{-L, -L, 5.0 * L}, {L, 0.0, 4.0 * L}, {-L, L, 3.0 * L}};
    std::vector<Subdomain> subs;
    subs.reserve(3);
    for (int s = 0; s < 3; ++s) {
        Subdomain sub;
        sub.index = s + 1;
        sub.box.lo = {cols[s].cx - half, cols[s].cy - half, 0.0};
        sub.box.hi = {cols[s].cx + half, cols[s].cy + half, cols[s].height};
        subs.push_back(sub);
    }
    return subs;
}

/// Restrict a field to the grid nodes inside `box` (boundary-inclusive).
/// The result is a field on the sub-grid, so node ordering is the global
/// node order filtered, and the same sampling/norm operations apply.
inline VelocityField restrict_field(const VelocityField& field, const Box& box) {
    const NodeRange r = node_range_in(field.grid, box);
    if (r.empty()) throw data_error("restrict: no grid nodes inside box");
    VelocityField out;
    out.grid.origin = field.grid.node_pos(r.lo[0], r.lo[1], r.lo[2]);
    out.grid.spacing = field.grid.spacing;
    out.grid.dims = {r.hi[0] - r.lo[0] + 1, r.hi[1] - r.lo[1] + 1, r.hi[2] - r.lo[2] + 1};
    out.dimensionless = field.dimensionless;
    out.values.reserve(3 * r.count());
    for (int k = r.lo[2]; k <= r.hi[2]; ++k)
        for (int j = r.lo[1]; j <= r.hi[1]; ++j)
            for (int i = r.lo[0]; i <= r.hi[0]; ++i) {
                const std::size_t n = 3 * field.grid.node_index(i, j, k);
                out.values.push_back(field.values[n]);
                out.values.push_back(field.values[n + 1]);
                out.values.push_back(field.values[n + 2]);
            }
    return out;
}

inline VelocityField restrict_field(const VelocityField& field, const Subdomain& sub) {
    return restrict_field(field, sub.box);
}

/// 1-based index of the containing subdomain; boundary points resolve to the
/// lowest index; nullopt if the point is outside all boxes.
inline std::optional<int> locate(const Vec3& point, std::span<const Subdomain> subs) {
    std::optional<int> best;
    for (const Subdomain& s : subs)
        if (s.box.contains(point) && (!best || s.index < *best)) best = s.index;
    return best;
}

} // namespace uwind
