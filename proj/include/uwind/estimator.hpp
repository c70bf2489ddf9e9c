#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uwind/cluster.hpp"
#include "uwind/field.hpp"
#include "uwind/inference.hpp"
#include "uwind/partition.hpp"

namespace uwind {

/// A probe location together with its containing subdomain.
struct SensorSpec {
    Vec3 location;
    int sub_index = 0;
};

inline SensorSpec make_sensor(const Vec3& location, std::span<const Subdomain> subs) {
    const std::optional<int> sub = locate(location, subs);
    if (!sub)
        throw data_error("sensor placement: location (" + std::to_string(location.x) +
                         ", " + std::to_string(location.y) + ", " +
                         std::to_string(location.z) + ") is outside all subdomains");
    return {location, *sub};
}

/// Precomputed signals at one sensor: the dimensional training signals with
/// their wind speeds, and the dimensionless centroid signals of the sensor's
/// subdomain.
struct SignalLibrary {
    SensorSpec sensor;
    std::vector<int> training_ids;
    std::vector<Vec3> training_signals;  ///< dimensional, per training snapshot
    std::vector<double> training_u_inf;
    std::vector<Vec3> centroid_signals;  ///< dimensionless, per cluster
};

inline SignalLibrary build_signal_library(const ClusterModel& model,
                                          const Dataset& train,
                                          const SensorSpec& sensor) {
    train.validate();
    const SubdomainModel& sm = model.subdomain(sensor.sub_index);
    SignalLibrary lib;
    lib.sensor = sensor;
    lib.training_ids.reserve(train.size());
    lib.training_signals.reserve(train.size());
    lib.training_u_inf.reserve(train.size());
    for (const Snapshot& snap : train.snapshots) {
        lib.training_ids.push_back(snap.id);
        lib.training_signals.push_back(sample_velocity(snap.field, sensor.location));
        lib.training_u_inf.push_back(snap.mu.u_inf);
    }
    lib.centroid_signals.reserve(sm.centroids.size());
    for (const VelocityField& c : sm.centroids)
        lib.centroid_signals.push_back(sample_velocity(c, sensor.location));
    return lib;
}

/// Incoming wind speed as the plain mean of u_inf over the k training signals
/// nearest to `signal` in Euclidean signal space; ties break by snapshot id.
inline double estimate_u_inf(const Vec3& signal, const SignalLibrary& lib, int k = 4) {
    const int M = static_cast<int>(lib.training_signals.size());
    if (M == 0) throw data_error("estimate_u_inf: empty signal library");
    if (k < 1 || k > M)
        throw config_error("estimate_u_inf: k must be in [1, M], got " +
                           std::to_string(k));
    std::vector<int> order(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) order[static_cast<std::size_t>(m)] = m;
    std::vector<double> d2(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m)
        d2[static_cast<std::size_t>(m)] = (lib.training_signals[static_cast<std::size_t>(m)] - signal).norm2();
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                          const double da = d2[static_cast<std::size_t>(a)];
                          const double db = d2[static_cast<std::size_t>(b)];
                          if (da != db) return da < db;
                          return lib.training_ids[static_cast<std::size_t>(a)] <
                                 lib.training_ids[static_cast<std::size_t>(b)];
                      });
    double acc = 0.0;
    for (int n = 0; n < k; ++n) acc += lib.training_u_inf[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])];
    return acc / static_cast<double>(k);
}

/// Weighted source clusters inferred from a normalized sensor signal.
struct ClusterWeight {
    int cluster = 0;  ///< 0-based
    double weight = 0.0;
};

/// k = 1: the nearest centroid signal with weight 1.
/// k = 2: nearest centroid f1; candidate set = the 3 centroids nearest to
/// centroid f1 in subdomain flow space (f1 excluded); f2 = signal-space argmin
/// over that set; weights are inverse-distance over {f1, f2}. An exact signal
/// match to f1 short-circuits to weight 1.
inline std::vector<ClusterWeight> affiliate_sensor(const Vec3& signal_plus,
                                                   const SignalLibrary& lib,
                                                   const ClusterModel& model, int k) {
    if (k != 1 && k != 2)
        throw config_error("affiliate_sensor: k must be 1 or 2, got " + std::to_string(k));
    const int K = static_cast<int>(lib.centroid_signals.size());
    if (K < 1) throw data_error("affiliate_sensor: no centroid signals");
    if (k == 2 && K < 4)
        throw config_error("affiliate_sensor: k=2 needs K >= 4 so the neighborhood "
                           "has 3 members");

    int f1 = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < K; ++c) {
        const double d = (lib.centroid_signals[static_cast<std::size_t>(c)] - signal_plus).norm2();
        if (d < bd) {
            bd = d;
            f1 = c;
        }
    }
    if (k == 1) return {{f1, 1.0}};

    const double d1 = std::sqrt(bd);
    const double c1_norm = lib.centroid_signals[static_cast<std::size_t>(f1)].norm();
    if (d1 <= 1e-12 * c1_norm || d1 == 0.0) return {{f1, 1.0}};

    // 3 nearest centroids to centroid f1 in subdomain flow space
    const SubdomainModel& sm = model.subdomain(lib.sensor.sub_index);
    std::vector<std::pair<double, int>> flow_dist;
    flow_dist.reserve(static_cast<std::size_t>(K - 1));
    for (int c = 0; c < K; ++c) {
        if (c == f1) continue;
        flow_dist.emplace_back(
            hilbert_distance(sm.centroids[static_cast<std::size_t>(c)], sm.centroids[static_cast<std::size_t>(f1)]), c);
    }
    std::sort(flow_dist.begin(), flow_dist.end());

    int f2 = -1;
    double d2 = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 3; ++n) {
        const int c = flow_dist[static_cast<std::size_t>(n)].second;
        const double d = (lib.centroid_signals[static_cast<std::size_t>(c)] - signal_plus).norm();
        if (d < d2) {
            d2 = d;
            f2 = c;
        }
    }

    const double w1 = 1.0 / d1;
    const double w2 = 1.0 / d2;
    return {{f1, w1 / (w1 + w2)}, {f2, w2 / (w1 + w2)}};
}

/// Query path sampled at uniform beta in [0, 1].
struct Trajectory {
    std::vector<Vec3> points;

    int n_samples() const { return static_cast<int>(points.size()); }
    double beta(int n) const {
        return static_cast<double>(n) / static_cast<double>(points.size() - 1);
    }
};

/// Validating constructor: every point must lie inside some subdomain.
inline Trajectory make_trajectory(std::vector<Vec3> points,
                                  std::span<const Subdomain> subs) {
    if (points.size() < 2) throw config_error("trajectory: need at least 2 samples");
    for (std::size_t n = 0; n < points.size(); ++n)
        if (!locate(points[n], subs))
            throw data_error("trajectory: sample " + std::to_string(n) + " at (" +
                             std::to_string(points[n].x) + ", " +
                             std::to_string(points[n].y) + ", " +
                             std::to_string(points[n].z) +
                             ") is outside all subdomains");
    Trajectory t;
    t.points = std::move(points);
    return t;
}

inline Trajectory line_trajectory(const Vec3& start, const Vec3& end, int n_samples,
                                  std::span<const Subdomain> subs) {
    if (n_samples < 2) throw config_error("trajectory: need at least 2 samples");
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n_samples));
    for (int n = 0; n < n_samples; ++n) {
        const double beta = static_cast<double>(n) / static_cast<double>(n_samples - 1);
        pts.push_back(start + (end - start) * beta);
    }
    return make_trajectory(std::move(pts), subs);
}

struct EstimatorOptions {
    int affiliation_k = 2;  ///< 1 or 2
    int u_inf_k = 4;        ///< neighbors for the incoming-wind estimate
};

struct PointEstimate {
    Vec3 velocity;          ///< dimensional, m/s
    std::vector<double> q;  ///< target-cluster distribution
    int target_sub = 0;
};

struct TrajectoryEstimate {
    double u_inf_hat = 0.0;
    std::vector<PointEstimate> points;
};

namespace detail {

/// Sample a restricted centroid with the query clamped into the centroid's
/// node bounding box (queries come from inside the subdomain box, which may
/// exceed the node hull by a sub-cell margin on non-aligned grids).
inline Vec3 sample_centroid(const VelocityField& centroid, Vec3 p) {
    const Box bb = centroid.grid.bounding_box();
    p.x = std::clamp(p.x, bb.lo.x, bb.hi.x);
    p.y = std::clamp(p.y, bb.lo.y, bb.hi.y);
    p.z = std::clamp(p.z, bb.lo.z, bb.hi.z);
    return sample_velocity(centroid, p);
}

inline PointEstimate expectation_at_point(const ClusterModel& model,
                                          const InferenceSet& matrices,
                                          std::span<const ClusterWeight> weights,
                                          int source_sub, double u_inf_hat,
                                          const Vec3& point,
                                          std::span<const Subdomain> subs) {
    const std::optional<int> tgt = locate(point, subs);
    if (!tgt)
        throw data_error("estimate: point (" + std::to_string(point.x) + ", " +
                         std::to_string(point.y) + ", " + std::to_string(point.z) +
                         ") is outside all subdomains");
    PointEstimate pe;
    pe.target_sub = *tgt;
    pe.q.assign(static_cast<std::size_t>(model.K), 0.0);
    if (*tgt == source_sub) {
        for (const ClusterWeight& w : weights) pe.q[static_cast<std::size_t>(w.cluster)] = w.weight;
    } else {
        const InferenceMatrix* P = matrices.find(source_sub, *tgt);
        if (!P)
            throw data_error("estimate: no inference matrix for pair " +
                             std::to_string(source_sub) + " -> " + std::to_string(*tgt));
        std::vector<double> w(static_cast<std::size_t>(model.K), 0.0);
        for (const ClusterWeight& cw : weights) w[static_cast<std::size_t>(cw.cluster)] = cw.weight;
        pe.q = propagate(w, *P);
    }
    const SubdomainModel& sm = model.subdomain(*tgt);
    Vec3 u_plus;
    for (int j = 0; j < model.K; ++j) {
        const double qj = pe.q[static_cast<std::size_t>(j)];
        if (qj == 0.0) continue;
        u_plus += qj * sample_centroid(sm.centroids[static_cast<std::size_t>(j)], point);
    }
    pe.velocity = u_inf_hat * u_plus;
    return pe;
}

} // namespace detail

/// Full single-point chain: incoming-wind kNN, signal normalization, sensor
/// affiliation, cross-subdomain propagation (identity when source == target),
/// and the expectation of the target centroids at the point.
inline PointEstimate estimate_at_point(const ClusterModel& model,
                                       const InferenceSet& matrices,
                                       const SignalLibrary& lib, const Vec3& signal,
                                       const Vec3& point,
                                       const EstimatorOptions& opts = {}) {
    const std::vector<Subdomain> subs = model.subdomain_geometry();
    const double u_inf_hat = estimate_u_inf(signal, lib, opts.u_inf_k);
    const Vec3 signal_plus = signal / u_inf_hat;
    const std::vector<ClusterWeight> weights =
        affiliate_sensor(signal_plus, lib, model, opts.affiliation_k);
    return detail::expectation_at_point(model, matrices, weights, lib.sensor.sub_index,
                                        u_inf_hat, point, subs);
}

/// Same chain along a trajectory; the signal-level steps run once.
inline TrajectoryEstimate estimate_trajectory(const ClusterModel& model,
                                              const InferenceSet& matrices,
                                              const SignalLibrary& lib,
                                              const Vec3& signal,
                                              const Trajectory& traj,
                                              const EstimatorOptions& opts = {}) {
    const std::vector<Subdomain> subs = model.subdomain_geometry();
    TrajectoryEstimate est;
    est.u_inf_hat = estimate_u_inf(signal, lib, opts.u_inf_k);
    const Vec3 signal_plus = signal / est.u_inf_hat;
    const std::vector<ClusterWeight> weights =
        affiliate_sensor(signal_plus, lib, model, opts.affiliation_k);
    est.points.reserve(traj.points.size());
    for (const Vec3& p : traj.points)
        est.points.push_back(detail::expectation_at_point(
            model, matrices, weights, lib.sensor.sub_index, est.u_inf_hat, p, subs));
    return est;
}

enum class ErrorComponents { all, x_only };

/// Relative L2 error (percent) along the trajectory by the trapezoid rule:
/// 100 * sqrt( int |u_hat - u|^2 dbeta / int |u|^2 dbeta ).
inline double trajectory_error(std::span<const Vec3> estimated, const Snapshot& truth,
                               const Trajectory& traj,
                               ErrorComponents comps = ErrorComponents::all) {
    const int n = traj.n_samples();
    if (static_cast<int>(estimated.size()) != n)
        throw data_error("trajectory_error: estimate count != sample count");
    double num = 0.0;
    double den = 0.0;
    for (int s = 0; s < n; ++s) {
        const Vec3 u = sample_velocity(truth.field, traj.points[static_cast<std::size_t>(s)]);
        const Vec3 d = estimated[static_cast<std::size_t>(s)] - u;
        double dn, un;
        if (comps == ErrorComponents::x_only) {
            dn = d.x * d.x;
            un = u.x * u.x;
        } else {
            dn = d.norm2();
            un = u.norm2();
        }
        const double w = (s == 0 || s == n - 1) ? 0.5 : 1.0;
        num += w * dn;
        den += w * un;
    }
    if (den == 0.0)
        throw numeric_error("trajectory_error: truth is identically zero along the "
                            "trajectory, error undefined");
    return 100.0 * std::sqrt(num / den);
}

struct ErrorTable {
    std::vector<int> snapshot_ids;
    std::vector<double> percent;  ///< NaN where the snapshot failed
    std::vector<std::string> failures;
    double average = 0.0;  ///< over non-failed snapshots
    int n_failed = 0;
};

/// Per-snapshot trajectory errors over a dataset, driving the estimator with
/// each snapshot's own sensor signal, plus their arithmetic mean. Individual
/// snapshot failures are collected; only all snapshots failing is fatal.
inline ErrorTable average_error(const ClusterModel& model, const InferenceSet& matrices,
                                const SignalLibrary& lib, const Dataset& data,
                                const Trajectory& traj, const EstimatorOptions& opts = {},
                                ErrorComponents comps = ErrorComponents::all) {
    data.validate();
    ErrorTable table;
    double acc = 0.0;
    int ok = 0;
    for (const Snapshot& snap : data.snapshots) {
        table.snapshot_ids.push_back(snap.id);
        try {
            const Vec3 signal = sample_velocity(snap.field, lib.sensor.location);
            const TrajectoryEstimate est =
                estimate_trajectory(model, matrices, lib, signal, traj, opts);
            std::vector<Vec3> vel;
            vel.reserve(est.points.size());
            for (const PointEstimate& pe : est.points) vel.push_back(pe.velocity);
            const double e = trajectory_error(vel, snap, traj, comps);
            table.percent.push_back(e);
            acc += e;
            ++ok;
        } catch (const std::exception& ex) {
            table.percent.push_back(std::numeric_limits<double>::quiet_NaN());
            table.failures.push_back("snapshot " + std::to_string(snap.id) + ": " +
                                     ex.what());
            ++table.n_failed;
        }
    }
    if (ok == 0)
        throw numeric_error("average_error: estimation failed for every snapshot; "
                            "first failure: " +
                            (table.failures.empty() ? std::string("?") : table.failures.front()));
    table.average = acc / static_cast<double>(ok);
    return table;
}

} // namespace uwind
