#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>
#include <utility>
#include <vector>

#include "uwind/field.hpp"
#include "uwind/parallel.hpp"
#include "uwind/rng.hpp"

namespace uwind {

/// Square-cross-section building: footprint side, height, column center.
struct BuildingSpec {
    double center_x = 0.0;  ///< m
    double center_y = 0.0;  ///< m
    double height = 0.0;    ///< m, > 0
    double side = 0.0;      ///< m, > 0

    void validate() const {
        if (!(height > 0.0) || !(side > 0.0))
            throw config_error("building: height and side must be > 0");
    }
};

/// The default three-building complex: heights 4L, 3L, 2L, side L,
/// centers (-L,-L), (L,0), (-L,L), tallest first.
inline std::vector<BuildingSpec> default_buildings(double L) {
    if (!(L > 0.0)) throw config_error("default_buildings: L must be > 0");
    return {
        {-L, -L, 4.0 * L, L},
        {L, 0.0, 3.0 * L, L},
        {-L, L, 2.0 * L, L},
    };
}

/// Everything the synthetic generator needs; defaults mirror the reference
/// configuration (800 train / 200 test, wind 7.9-20.7 m/s, all directions).
struct GenConfig {
    std::vector<BuildingSpec> buildings;
    GridSpec grid;
    double length_scale = 0.5;  ///< L, m

    int m_train = 800;
    int n_test = 200;
    double u_min = 7.9;   ///< m/s
    double u_max = 20.7;  ///< m/s
    double alpha_min = 0.0;
    double alpha_max = 360.0;

    double reynolds_eps = 0.02;  ///< scaling-breaking perturbation amplitude
    double noise_sigma = 0.01;   ///< dimensionless additive noise std
    std::uint64_t seed = 7;

    // wake shape: amplitude a0/(1 + x_downstream/L), width sigma0 + kappa*x,
    // smooth vertical cutoff over [height, height + 0.5 L]
    double wake_amplitude = 0.6;
    double wake_sigma0 = 0.4;  ///< in multiples of L
    double wake_kappa = 0.15;

    void validate() const {
        grid.validate();
        for (const BuildingSpec& b : buildings) b.validate();
        if (!(length_scale > 0.0)) throw config_error("gen: length_scale must be > 0");
        if (m_train < 1) throw config_error("gen: m_train must be >= 1");
        if (n_test < 0) throw config_error("gen: n_test must be >= 0");
        if (!(u_min > 0.0) || !(u_max >= u_min))
            throw config_error("gen: need 0 < u_min <= u_max");
        if (!(alpha_max >= alpha_min)) throw config_error("gen: alpha range inverted");
        if (reynolds_eps < 0.0 || noise_sigma < 0.0)
            throw config_error("gen: perturbation amplitudes must be >= 0");
    }

    /// Defaults at length scale L: 33x33x25 grid spanning [-4L,4L]^2 x [0,6L].
    static GenConfig defaults(double L = 0.5) {
        GenConfig cfg;
        cfg.length_scale = L;
        cfg.buildings = default_buildings(L);
        cfg.grid.origin = {-4.0 * L, -4.0 * L, 0.0};
        cfg.grid.spacing = {0.25 * L, 0.25 * L, 0.25 * L};
        cfg.grid.dims = {33, 33, 25};
        return cfg;
    }
};

namespace detail {

// substream purposes
inline constexpr std::uint64_t kConditionStream = 0;
inline constexpr std::uint64_t kNoiseStream = 1;

inline double smooth_cutoff_above(double z, double height, double L) {
    // 1 at z <= height, smooth descent to 0 at z >= height + 0.5 L
    const double s = std::clamp((z - height) / (0.5 * L), 0.0, 1.0);
    return 1.0 - s * s * (3.0 - 2.0 * s);
}

inline bool inside_footprint(const Vec3& p, const BuildingSpec& b) {
    return std::abs(p.x - b.center_x) <= 0.5 * b.side &&
           std::abs(p.y - b.center_y) <= 0.5 * b.side && p.z <= b.height &&
           p.z >= 0.0;
}

} // namespace detail

/// Operating condition assigned to snapshot `id` under `cfg` (uniform draws
/// from a per-id substream, so conditions are independent of dataset sizes).
inline OperatingCondition sample_condition(int id, const GenConfig& cfg) {
    SplitMix64 rng(derive_stream(cfg.seed, static_cast<std::uint64_t>(id),
                                 detail::kConditionStream));
    OperatingCondition mu;
    mu.u_inf = cfg.u_min + (cfg.u_max - cfg.u_min) * rng.uniform01();
    double alpha = cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * rng.uniform01();
    if (alpha >= 360.0) alpha = std::fmod(alpha, 360.0);
    mu.alpha_deg = alpha;
    return mu;
}

/// Deterministic synthetic snapshot for (id, mu, cfg):
/// free stream rotated by alpha, one Gaussian wake deficit per building
/// (downstream only, decaying amplitude, growing width, smooth rooftop
/// cutoff), an optional scaling-breaking perturbation, seeded noise, and
/// zero velocity inside building footprints.
inline Snapshot generate_snapshot(int id, const OperatingCondition& mu,
                                  const GenConfig& cfg) {
    cfg.validate();
    mu.validate();

    const double L = cfg.length_scale;
    const double a = mu.alpha_deg * 3.14159265358979323846 / 180.0;
    const Vec3 stream{std::cos(a), std::sin(a), 0.0};
    const Vec3 cross{-std::sin(a), std::cos(a), 0.0};

    // reference speed for the Reynolds-style perturbation; fixed so that the
    // perturbation vanishes identically only when reynolds_eps == 0
    const double g_re = std::log(mu.u_inf / 10.0);

    GaussianStream noise(derive_stream(cfg.seed, static_cast<std::uint64_t>(id),
                                       detail::kNoiseStream));
    const bool with_noise = cfg.noise_sigma > 0.0;

    Snapshot snap;
    snap.id = id;
    snap.mu = mu;
    snap.field = VelocityField::zeros(cfg.grid);

    const GridSpec& g = cfg.grid;
    std::size_t n = 0;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i, n += 3) {
                const Vec3 p = g.node_pos(i, j, k);

                Vec3 nvec;
                if (with_noise)
                    nvec = {noise.next(), noise.next(), noise.next()};

                bool solid = false;
                for (const BuildingSpec& b : cfg.buildings)
                    if (detail::inside_footprint(p, b)) {
                        solid = true;
                        break;
                    }
                if (solid) continue;  // footprint nodes stay zero

                double deficit = 0.0;
                for (const BuildingSpec& b : cfg.buildings) {
                    const double rx = p.x - b.center_x;
                    const double ry = p.y - b.center_y;
                    const double xd = rx * stream.x + ry * stream.y;
                    if (xd <= 0.0) continue;  // wake acts downstream only
                    const double yc = rx * cross.x + ry * cross.y;
                    const double sigma = (cfg.wake_sigma0 + cfg.wake_kappa * xd / L) * L;
                    const double amp = cfg.wake_amplitude / (1.0 + xd / L);
                    deficit += amp * std::exp(-0.5 * yc * yc / (sigma * sigma)) *
                               detail::smooth_cutoff_above(p.z, b.height, L);
                }

                Vec3 u_plus = stream * (1.0 - deficit);
                if (cfg.reynolds_eps > 0.0) {
                    const Vec3 h{
                        std::sin(0.5 * 3.14159265358979323846 * p.x / L) *
                            std::cos(0.5 * 3.14159265358979323846 * p.y / L),
                        std::sin(3.14159265358979323846 * p.z / (3.0 * L)) *
                            std::cos(0.5 * 3.14159265358979323846 * p.x / L),
                        0.25 * std::cos(0.5 * 3.14159265358979323846 * p.y / L) *
                            std::sin(0.5 * 3.14159265358979323846 * p.z / L)};
                    u_plus += (cfg.reynolds_eps * g_re) * h;
                }
                if (with_noise) u_plus += cfg.noise_sigma * nvec;

                const Vec3 u = mu.u_inf * u_plus;
                snap.field.values[n] = u.x;
                snap.field.values[n + 1] = u.y;
                snap.field.values[n + 2] = u.z;
            }
    return snap;
}

/// Train and test datasets under cfg: ids 1..m_train and m_train+1..m_train+n_test,
/// conditions sampled per id. Identical cfg gives identical output; generation
/// is independent per id and safe to parallelize.
inline std::pair<Dataset, Dataset> generate_dataset(const GenConfig& cfg,
                                                    int threads = 1) {
    cfg.validate();
    const int total = cfg.m_train + cfg.n_test;
    std::vector<Snapshot> all(static_cast<std::size_t>(total));
    parallel_for(total, threads, [&](int idx) {
        const int id = idx + 1;
        all[static_cast<std::size_t>(idx)] = generate_snapshot(id, sample_condition(id, cfg), cfg);
    });
    Dataset train, test;
    train.role = DatasetRole::train;
    test.role = DatasetRole::test;
    train.snapshots.assign(std::make_move_iterator(all.begin()),
                           std::make_move_iterator(all.begin() + cfg.m_train));
    test.snapshots.assign(std::make_move_iterator(all.begin() + cfg.m_train),
                          std::make_move_iterator(all.end()));
    return {std::move(train), std::move(test)};
}

} // namespace uwind
