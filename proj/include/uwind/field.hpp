#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "uwind/errors.hpp"
#include "uwind/geometry.hpp"

namespace uwind {

/// Operating condition of one snapshot: wind speed magnitude and direction.
struct OperatingCondition {
    double u_inf = 0.0;      ///< wind speed magnitude, m/s; > 0
    double alpha_deg = 0.0;  ///< wind direction, degrees in [0, 360)

    void validate() const {
        if (!(u_inf > 0.0))
            throw data_error("operating condition: u_inf must be > 0, got " +
                             std::to_string(u_inf));
        if (!(alpha_deg >= 0.0 && alpha_deg < 360.0))
            throw data_error("operating condition: alpha_deg must be in [0, 360), got " +
                             std::to_string(alpha_deg));
    }
};

/// Regular grid: origin, per-axis spacing, per-axis node counts.
/// Node order is x-fastest, then y, then z.
struct GridSpec {
    Vec3 origin;
    Vec3 spacing;
    std::array<int, 3> dims{0, 0, 0};

    std::size_t n_nodes() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    std::size_t node_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }

    Vec3 node_pos(int i, int j, int k) const {
        return {origin.x + spacing.x * i, origin.y + spacing.y * j,
                origin.z + spacing.z * k};
    }

    Vec3 max_corner() const {
        return node_pos(dims[0] - 1, dims[1] - 1, dims[2] - 1);
    }

    Box bounding_box() const { return {origin, max_corner()}; }

    double cell_volume() const { return spacing.x * spacing.y * spacing.z; }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (!(spacing[a] > 0.0))
                throw data_error("grid: spacing components must be > 0");
            if (dims[a] < 2)
                throw data_error("grid: dims components must be >= 2");
        }
    }

    bool operator==(const GridSpec& o) const = default;
};

/// Inclusive per-axis node index range of a grid selection.
struct NodeRange {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{-1, -1, -1};

    bool empty() const {
        return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2];
    }
    std::size_t count() const {
        if (empty()) return 0;
        return static_cast<std::size_t>(hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) *
               (hi[2] - lo[2] + 1);
    }
};

/// Grid nodes inside `box`, boundary-inclusive. Empty range if none.
inline NodeRange node_range_in(const GridSpec& grid, const Box& box) {
    NodeRange r;
    for (int a = 0; a < 3; ++a) {
        const double tol = 1e-9 * grid.spacing[a];
        double lo = (box.lo[a] - grid.origin[a] - tol) / grid.spacing[a];
        double hi = (box.hi[a] - grid.origin[a] + tol) / grid.spacing[a];
        r.lo[a] = std::max(0, static_cast<int>(std::ceil(lo - 1e-12)));
        r.hi[a] = std::min(grid.dims[a] - 1, static_cast<int>(std::floor(hi + 1e-12)));
    }
    return r;
}

/// Three velocity components per grid node; m/s when dimensional.
struct VelocityField {
    GridSpec grid;
    std::vector<double> values;  ///< 3 per node, x-fastest node order
    bool dimensionless = false;

    static VelocityField zeros(const GridSpec& g, bool dimensionless = false) {
        VelocityField f;
        f.grid = g;
        f.values.assign(3 * g.n_nodes(), 0.0);
        f.dimensionless = dimensionless;
        return f;
    }

    Vec3 at(int i, int j, int k) const {
        const std::size_t n = 3 * grid.node_index(i, j, k);
        return {values[n], values[n + 1], values[n + 2]};
    }

    void set(int i, int j, int k, const Vec3& v) {
        const std::size_t n = 3 * grid.node_index(i, j, k);
        values[n] = v.x;
        values[n + 1] = v.y;
        values[n + 2] = v.z;
    }

    void validate() const {
        grid.validate();
        if (values.size() != 3 * grid.n_nodes())
            throw data_error("velocity field: value count " +
                             std::to_string(values.size()) + " != 3 x node count " +
                             std::to_string(grid.n_nodes()));
        for (double v : values)
            if (!std::isfinite(v)) throw data_error("velocity field: non-finite value");
    }
};

/// One steady velocity field with its operating condition.
struct Snapshot {
    int id = 0;
    OperatingCondition mu;
    VelocityField field;
};

enum class DatasetRole { train, test };

/// Ordered snapshots on one shared grid.
struct Dataset {
    std::vector<Snapshot> snapshots;
    DatasetRole role = DatasetRole::train;

    std::size_t size() const { return snapshots.size(); }

    const GridSpec& grid() const {
        if (snapshots.empty()) throw data_error("dataset: empty");
        return snapshots.front().field.grid;
    }

    void validate() const {
        if (snapshots.empty()) throw data_error("dataset: empty");
        const GridSpec& g = snapshots.front().field.grid;
        std::vector<int> ids;
        ids.reserve(snapshots.size());
        for (const Snapshot& s : snapshots) {
            if (!(s.field.grid == g))
                throw data_error("dataset: snapshot " + std::to_string(s.id) +
                                 " is on a different grid");
            ids.push_back(s.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw data_error("dataset: duplicate snapshot id");
    }
};

/// Divide every component by u_inf. The input snapshot is unchanged.
inline VelocityField normalize_snapshot(const Snapshot& snap) {
    if (!(snap.mu.u_inf > 0.0))
        throw data_error("normalize: invalid condition, u_inf must be > 0");
    VelocityField out = snap.field;
    const double inv = 1.0 / snap.mu.u_inf;
    for (double& v : out.values) v *= inv;
    out.dimensionless = true;
    return out;
}

/// Trilinear interpolation of the 8 surrounding nodes; exact at nodes.
/// Queries exactly on the upper boundary use the last cell with weight 1.
inline Vec3 sample_velocity(const VelocityField& field, const Vec3& point) {
    const GridSpec& g = field.grid;
    int cell[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] < 2)
            throw data_error("sample: grid is degenerate on axis " + std::to_string(a));
        const double t = (point[a] - g.origin[a]) / g.spacing[a];
        const double tol = 1e-9;
        if (t < -tol || t > g.dims[a] - 1 + tol)
            throw data_error("sample: point outside grid bounding box on axis " +
                             std::to_string(a));
        int c = static_cast<int>(std::floor(t));
        c = std::clamp(c, 0, g.dims[a] - 2);
        cell[a] = c;
        w[a] = std::clamp(t - c, 0.0, 1.0);
    }
    Vec3 out;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                const double weight = (di ? w[0] : 1.0 - w[0]) *
                                      (dj ? w[1] : 1.0 - w[1]) *
                                      (dk ? w[2] : 1.0 - w[2]);
                if (weight == 0.0) continue;
                out += weight * field.at(cell[0] + di, cell[1] + dj, cell[2] + dk);
            }
    return out;
}

/// Volume-weighted L2 norm over grid nodes inside `region`:
/// sqrt(sum |u(node)|^2 * dV), boundary nodes included.
inline double hilbert_norm(const VelocityField& field, const Box& region) {
    const NodeRange r = node_range_in(field.grid, region);
    if (r.empty()) throw data_error("hilbert_norm: no grid nodes in region");
    double acc = 0.0;
    for (int k = r.lo[2]; k <= r.hi[2]; ++k)
        for (int j = r.lo[1]; j <= r.hi[1]; ++j)
            for (int i = r.lo[0]; i <= r.hi[0]; ++i)
                acc += field.at(i, j, k).norm2();
    return std::sqrt(acc * field.grid.cell_volume());
}

/// Norm over the field's whole grid.
inline double hilbert_norm(const VelocityField& field) {
    return hilbert_norm(field, field.grid.bounding_box());
}

/// Volume-weighted L2 distance between two fields on the same grid.
inline double hilbert_distance(const VelocityField& a, const VelocityField& b) {
    if (!(a.grid == b.grid))
        throw data_error("hilbert_distance: fields are on different grids");
    double acc = 0.0;
    for (std::size_t n = 0; n < a.values.size(); ++n) {
        const double d = a.values[n] - b.values[n];
        acc += d * d;
    }
    return std::sqrt(acc * a.grid.cell_volume());
}

} // namespace uwind
