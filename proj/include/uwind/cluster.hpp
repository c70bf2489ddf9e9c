#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uwind/field.hpp"
#include "uwind/parallel.hpp"
#include "uwind/partition.hpp"
#include "uwind/rng.hpp"

namespace uwind {

/// Coarse-grained flow representation of one subdomain: K centroid fields on
/// the restricted sub-grid (dimensionless) plus the training affiliations.
struct SubdomainModel {
    Subdomain sub;
    std::vector<VelocityField> centroids;  ///< K restricted dimensionless fields
    std::vector<int> affiliations;         ///< per training snapshot, 0-based cluster
};

struct ClusterModel {
    GridSpec grid;
    double length_scale = 0.5;
    int K = 0;
    std::uint64_t seed = 0;
    std::string training_digest;
    std::vector<int> training_ids;
    std::vector<SubdomainModel> subdomains;  ///< ordered by subdomain index

    const SubdomainModel& subdomain(int sub_index) const {
        for (const SubdomainModel& s : subdomains)
            if (s.sub.index == sub_index) return s;
        throw data_error("cluster model: no subdomain with index " +
                         std::to_string(sub_index));
    }

    std::vector<Subdomain> subdomain_geometry() const {
        std::vector<Subdomain> subs;
        subs.reserve(subdomains.size());
        for (const SubdomainModel& s : subdomains) subs.push_back(s.sub);
        return subs;
    }
};

/// FNV-1a digest over grid geometry and the snapshot conditions; recorded in
/// model artifacts and reproducible from a loaded dataset.
inline std::string dataset_digest(const Dataset& data) {
    data.validate();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    };
    const GridSpec& g = data.grid();
    for (int a = 0; a < 3; ++a) {
        mix(g.origin[a]);
        mix(g.spacing[a]);
        mix(static_cast<double>(g.dims[a]));
    }
    for (const Snapshot& s : data.snapshots) {
        mix(static_cast<double>(s.id));
        mix(s.mu.u_inf);
        mix(s.mu.alpha_deg);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace detail {

inline double sqdist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double d = a[n] - b[n];
        acc += d * d;
    }
    return acc;
}

/// Lloyd's algorithm with k-means++ seeding on row vectors. Deterministic for
/// a fixed key; the assignment step may run in parallel, the update step is a
/// fixed-order serial reduction so threaded runs match serial runs exactly.
struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignments;
    int iterations = 0;
};

inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, int K,
                           std::uint64_t key, int threads, double cell_volume) {
    const int M = static_cast<int>(points.size());
    const std::size_t dim = points.front().size();
    SplitMix64 rng(key);

    // k-means++ seeding
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<std::size_t>(K));
    std::vector<char> chosen(static_cast<std::size_t>(M), 0);
    {
        const int first = std::min(M - 1, static_cast<int>(rng.uniform01() * M));
        centroids.push_back(points[static_cast<std::size_t>(first)]);
        chosen[static_cast<std::size_t>(first)] = 1;
    }
    std::vector<double> d2(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) d2[static_cast<std::size_t>(m)] = sqdist(points[static_cast<std::size_t>(m)], centroids[0]);
    while (static_cast<int>(centroids.size()) < K) {
        double total = 0.0;
        for (double v : d2) total += v;
        int pick = -1;
        if (total > 0.0) {
            const double r = rng.uniform01() * total;
            double cum = 0.0;
            for (int m = 0; m < M; ++m) {
                cum += d2[static_cast<std::size_t>(m)];
                if (cum >= r) {
                    pick = m;
                    break;
                }
            }
            if (pick < 0) pick = M - 1;
        } else {
            // all remaining points coincide with a centroid: take the lowest
            // index not yet chosen so seeding stays deterministic
            for (int m = 0; m < M; ++m)
                if (!chosen[static_cast<std::size_t>(m)]) {
                    pick = m;
                    break;
                }
            if (pick < 0) pick = 0;
        }
        chosen[static_cast<std::size_t>(pick)] = 1;
        centroids.push_back(points[static_cast<std::size_t>(pick)]);
        for (int m = 0; m < M; ++m) {
            const double d = sqdist(points[static_cast<std::size_t>(m)], centroids.back());
            if (d < d2[static_cast<std::size_t>(m)]) d2[static_cast<std::size_t>(m)] = d;
        }
    }

    std::vector<int> assign(static_cast<std::size_t>(M), -1);
    std::vector<int> prev_assign;
    std::vector<double> best_d2(static_cast<std::size_t>(M), 0.0);
    double prev_objective = std::numeric_limits<double>::infinity();
    bool fixed_point = false;
    int iter = 0;
    for (; iter < 300; ++iter) {
        parallel_for(M, threads, [&](int m) {
            const std::span<const double> x(points[static_cast<std::size_t>(m)]);
            int best = 0;
            double bd = sqdist(x, centroids[0]);
            for (int c = 1; c < K; ++c) {
                const double d = sqdist(x, centroids[static_cast<std::size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[static_cast<std::size_t>(m)] = best;
            best_d2[static_cast<std::size_t>(m)] = bd;
        });

        double objective = 0.0;
        for (int m = 0; m < M; ++m) objective += best_d2[static_cast<std::size_t>(m)];
        objective *= cell_volume;
        if (objective > prev_objective * (1.0 + 1e-9) + 1e-300)
            throw numeric_error("k-means: within-cluster distance increased");
        prev_objective = objective;

        // repair empty clusters: move the farthest member of the largest
        // cluster into each empty one
        std::vector<int> counts(static_cast<std::size_t>(K), 0);
        for (int m = 0; m < M; ++m) ++counts[static_cast<std::size_t>(assign[m])];
        for (int c = 0; c < K; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int largest = 0;
            for (int c2 = 1; c2 < K; ++c2)
                if (counts[static_cast<std::size_t>(c2)] > counts[static_cast<std::size_t>(largest)]) largest = c2;
            int far_m = -1;
            double far_d = -1.0;
            for (int m = 0; m < M; ++m)
                if (assign[static_cast<std::size_t>(m)] == largest && best_d2[static_cast<std::size_t>(m)] > far_d) {
                    far_d = best_d2[static_cast<std::size_t>(m)];
                    far_m = m;
                }
            if (far_m < 0) throw numeric_error("k-means: cannot repair empty cluster");
            assign[static_cast<std::size_t>(far_m)] = c;
            best_d2[static_cast<std::size_t>(far_m)] = 0.0;
            --counts[static_cast<std::size_t>(largest)];
            ++counts[static_cast<std::size_t>(c)] ;
        }

        if (assign == prev_assign) {  // fixed point: centroids are means
            fixed_point = true;
            break;
        }
        prev_assign = assign;

        // update step: fixed-order accumulation per cluster
        std::vector<std::vector<double>> next(static_cast<std::size_t>(K),
                                              std::vector<double>(dim, 0.0));
        std::vector<int> counts2(static_cast<std::size_t>(K), 0);
        for (int m = 0; m < M; ++m) {
            const int c = assign[static_cast<std::size_t>(m)];
            ++counts2[static_cast<std::size_t>(c)];
            const std::vector<double>& x = points[static_cast<std::size_t>(m)];
            std::vector<double>& acc = next[static_cast<std::size_t>(c)];
            for (std::size_t n = 0; n < dim; ++n) acc[n] += x[n];
        }
        double move2 = 0.0;
        double mag2 = 0.0;
        for (int c = 0; c < K; ++c) {
            std::vector<double>& acc = next[static_cast<std::size_t>(c)];
            const double inv = 1.0 / counts2[static_cast<std::size_t>(c)];
            for (std::size_t n = 0; n < dim; ++n) acc[n] *= inv;
            move2 += sqdist(acc, centroids[static_cast<std::size_t>(c)]);
            for (double v : acc) mag2 += v * v;
        }
        centroids = std::move(next);
        if (mag2 > 0.0 && std::sqrt(move2 / mag2) < 1e-8) {
            // converged by movement: one more assignment pass keeps the
            // affiliations consistent with the returned centroids
            continue;
        }
    }

    if (!fixed_point) {
        // iteration cap: one plain assignment keeps the affiliations
        // consistent with the returned centroids
        std::vector<int> counts(static_cast<std::size_t>(K), 0);
        for (int m = 0; m < M; ++m) {
            const std::span<const double> x(points[static_cast<std::size_t>(m)]);
            int best = 0;
            double bd = sqdist(x, centroids[0]);
            for (int c = 1; c < K; ++c) {
                const double d = sqdist(x, centroids[static_cast<std::size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[static_cast<std::size_t>(m)] = best;
            ++counts[static_cast<std::size_t>(best)];
        }
        for (int c = 0; c < K; ++c)
            if (counts[static_cast<std::size_t>(c)] == 0)
                throw numeric_error("k-means: no stable non-empty clustering within "
                                    "300 iterations");
    }

    KMeansResult res;
    res.centroids = std::move(centroids);
    res.assignments = std::move(assign);
    res.iterations = iter;
    return res;
}

} // namespace detail

/// Per-subdomain k-means (Lloyd, k-means++ seeding) on restricted normalized
/// fields. Deterministic given (train, K, seed); converged when relative
/// centroid movement < 1e-8 or after 300 iterations.
inline ClusterModel fit_clusters(const Dataset& train, std::span<const Subdomain> subs,
                                 int K, std::uint64_t seed, double length_scale = 0.5,
                                 int threads = 1) {
    train.validate();
    const int M = static_cast<int>(train.size());
    if (K < 1) throw config_error("fit_clusters: K must be >= 1");
    if (K > M)
        throw config_error("fit_clusters: infeasible, K=" + std::to_string(K) +
                           " exceeds M=" + std::to_string(M));
    if (subs.empty()) throw config_error("fit_clusters: no subdomains");

    ClusterModel model;
    model.grid = train.grid();
    model.length_scale = length_scale;
    model.K = K;
    model.seed = seed;
    model.training_digest = dataset_digest(train);
    model.training_ids.reserve(static_cast<std::size_t>(M));
    for (const Snapshot& s : train.snapshots) model.training_ids.push_back(s.id);

    for (const Subdomain& sub : subs) {
        // restricted normalized training matrix
        GridSpec sub_grid;
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<std::size_t>(M));
        for (const Snapshot& snap : train.snapshots) {
            VelocityField r = restrict_field(normalize_snapshot(snap), sub.box);
            if (rows.empty()) sub_grid = r.grid;
            rows.push_back(std::move(r.values));
        }

        detail::KMeansResult km = detail::kmeans(
            rows, K, derive_stream(seed, static_cast<std::uint64_t>(sub.index), 2),
            threads, sub_grid.cell_volume());

        SubdomainModel sm;
        sm.sub = sub;
        sm.affiliations = std::move(km.assignments);
        sm.centroids.reserve(static_cast<std::size_t>(K));
        for (std::vector<double>& c : km.centroids) {
            VelocityField f;
            f.grid = sub_grid;
            f.dimensionless = true;
            f.values = std::move(c);
            sm.centroids.push_back(std::move(f));
        }
        model.subdomains.push_back(std::move(sm));
    }
    return model;
}

/// Index of the nearest centroid of `sub_index` under the subdomain Hilbert
/// norm; ties resolve to the lowest index. The field must be dimensionless
/// and live on the model's grid (or already on the restricted sub-grid).
inline int affiliation(const VelocityField& field, const ClusterModel& model,
                       int sub_index) {
    const SubdomainModel& sm = model.subdomain(sub_index);
    const GridSpec& sub_grid = sm.centroids.front().grid;
    const VelocityField* restricted = &field;
    VelocityField scratch;
    if (!(field.grid == sub_grid)) {
        if (!(field.grid == model.grid))
            throw data_error("affiliation: field is on neither the model grid nor "
                             "the subdomain grid");
        scratch = restrict_field(field, sm.sub.box);
        restricted = &scratch;
    }
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < static_cast<int>(sm.centroids.size()); ++c) {
        const double d = detail::sqdist(restricted->values, sm.centroids[static_cast<std::size_t>(c)].values);
        if (d < bd) {
            bd = d;
            best = c;
        }
    }
    return best;
}

struct RepresentationErrors {
    std::vector<int> snapshot_ids;
    std::vector<double> percent;  ///< per retained snapshot
    double average = 0.0;
    int excluded = 0;  ///< zero-norm restrictions skipped
};

/// Relative distance (percent) of each snapshot's restriction to its nearest
/// centroid, and the arithmetic mean: 100 * |u+ - c| / |u+| per subdomain.
inline RepresentationErrors representation_error(const ClusterModel& model,
                                                 const Dataset& data, int sub_index) {
    data.validate();
    if (!(data.grid() == model.grid))
        throw data_error("representation_error: dataset grid differs from model grid");
    const SubdomainModel& sm = model.subdomain(sub_index);
    RepresentationErrors out;
    double acc = 0.0;
    for (const Snapshot& snap : data.snapshots) {
        VelocityField r = restrict_field(normalize_snapshot(snap), sm.sub.box);
        const double denom = hilbert_norm(r);
        if (denom == 0.0) {
            ++out.excluded;
            continue;
        }
        const int k = affiliation(r, model, sub_index);
        const double err = 100.0 * hilbert_distance(r, sm.centroids[static_cast<std::size_t>(k)]) / denom;
        out.snapshot_ids.push_back(snap.id);
        out.percent.push_back(err);
        acc += err;
    }
    if (out.percent.empty())
        throw data_error("representation_error: all snapshot restrictions have zero norm");
    out.average = acc / static_cast<double>(out.percent.size());
    return out;
}

} // namespace uwind
