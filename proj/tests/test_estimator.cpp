#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "uwind/estimator.hpp"
#include "uwind/sensor_opt.hpp"
#include "uwind/wake.hpp"

using namespace uwind;

namespace {

GridSpec two_box_grid() {
    GridSpec g;
    g.origin = {0.0, 0.0, 0.0};
    g.spacing = {1.0, 1.0, 1.0};
    g.dims = {5, 3, 3};
    return g;
}

VelocityField constant_field(const GridSpec& g, const Vec3& v, bool dimensionless) {
    VelocityField f = VelocityField::zeros(g, dimensionless);
    for (std::size_t n = 0; n < f.values.size(); n += 3) {
        f.values[n] = v.x;
        f.values[n + 1] = v.y;
        f.values[n + 2] = v.z;
    }
    return f;
}

/// Hand-built two-subdomain model with K = 4 constant centroids per side.
/// Source centroids have x-values 1, 3, 10, 20; target centroids are
/// (1,0,0), (0,1,0), 0, 0.
ClusterModel toy_model() {
    const GridSpec g = two_box_grid();
    ClusterModel model;
    model.grid = g;
    model.K = 4;
    model.length_scale = 1.0;

    Subdomain s1{1, Box{{0.0, 0.0, 0.0}, {1.0, 2.0, 2.0}}};
    Subdomain s2{2, Box{{3.0, 0.0, 0.0}, {4.0, 2.0, 2.0}}};

    SubdomainModel m1;
    m1.sub = s1;
    for (double cx : {1.0, 3.0, 10.0, 20.0})
        m1.centroids.push_back(
            restrict_field(constant_field(g, {cx, 0.0, 0.0}, true), s1.box));
    m1.affiliations = {0, 1, 2, 3};

    SubdomainModel m2;
    m2.sub = s2;
    m2.centroids.push_back(restrict_field(constant_field(g, {1.0, 0.0, 0.0}, true), s2.box));
    m2.centroids.push_back(restrict_field(constant_field(g, {0.0, 1.0, 0.0}, true), s2.box));
    m2.centroids.push_back(restrict_field(constant_field(g, {0.0, 0.0, 0.0}, true), s2.box));
    m2.centroids.push_back(restrict_field(constant_field(g, {0.0, 0.0, 0.0}, true), s2.box));
    m2.affiliations = {0, 1, 2, 3};

    model.subdomains = {m1, m2};
    return model;
}

SignalLibrary scalar_library(const std::vector<double>& signals,
                             const std::vector<double>& u_infs,
                             const ClusterModel& model) {
    SignalLibrary lib;
    lib.sensor = {{0.5, 1.0, 1.0}, 1};
    for (std::size_t m = 0; m < signals.size(); ++m) {
        lib.training_ids.push_back(static_cast<int>(m) + 1);
        lib.training_signals.push_back({signals[m], 0.0, 0.0});
        lib.training_u_inf.push_back(u_infs[m]);
    }
    for (const VelocityField& c : model.subdomain(1).centroids)
        lib.centroid_signals.push_back(sample_velocity(c, lib.sensor.location));
    return lib;
}

GenConfig mini_cfg(int m_train, int n_test = 0) {
    GenConfig cfg = GenConfig::defaults(0.5);
    cfg.grid.dims = {17, 17, 13};
    cfg.grid.spacing = {0.25, 0.25, 0.25};  // 0.5 L
    cfg.grid.origin = {-2.0, -2.0, 0.0};
    cfg.m_train = m_train;
    cfg.n_test = n_test;
    return cfg;
}

} // namespace

TEST_CASE("sensor construction requires a containing subdomain") {
    auto subs = default_subdomains(0.5);
    SensorSpec s = make_sensor({-0.75, -0.25, 2.1}, subs);
    REQUIRE(s.sub_index == 1);
    REQUIRE_THROWS_AS(make_sensor({3.0, 3.0, 0.5}, subs), data_error);
}

TEST_CASE("signal library sizes and nodal exactness") {
    GenConfig cfg = mini_cfg(5);
    auto [train, test] = generate_dataset(cfg);
    auto subs = default_subdomains(0.5);
    ClusterModel model = fit_clusters(train, subs, 3, 1, 0.5);

    // sensor exactly on a grid node inside subdomain 1
    const Vec3 node = cfg.grid.node_pos(5, 5, 9);
    REQUIRE(locate(node, subs) == 1);
    SignalLibrary lib = build_signal_library(model, train, make_sensor(node, subs));

    REQUIRE(lib.training_signals.size() == 5);
    REQUIRE(lib.centroid_signals.size() == 3);

    // nodal sampling is exact
    for (std::size_t m = 0; m < train.size(); ++m) {
        int gi = 5, gj = 5, gk = 9;
        REQUIRE(lib.training_signals[m] == train.snapshots[m].field.at(gi, gj, gk));
    }

    SignalLibrary lib2 = build_signal_library(model, train, make_sensor(node, subs));
    REQUIRE(lib2.training_signals == lib.training_signals);
    REQUIRE(lib2.centroid_signals == lib.centroid_signals);
}

TEST_CASE("u_inf kNN averages the four nearest signals") {
    ClusterModel model = toy_model();
    SignalLibrary lib =
        scalar_library({4.0, 5.0, 6.0, 7.0, 10.0}, {8.0, 10.0, 12.0, 14.0, 20.0}, model);
    REQUIRE(estimate_u_inf({5.5, 0.0, 0.0}, lib, 4) == Approx(11.0).epsilon(1e-14));
}

TEST_CASE("u_inf kNN with k = 1 returns an exact match's wind speed") {
    ClusterModel model = toy_model();
    SignalLibrary lib =
        scalar_library({4.0, 5.0, 6.0, 7.0, 10.0}, {8.0, 10.0, 12.0, 14.0, 20.0}, model);
    REQUIRE(estimate_u_inf({7.0, 0.0, 0.0}, lib, 1) == 14.0);
}

TEST_CASE("u_inf kNN breaks ties by snapshot id") {
    ClusterModel model = toy_model();
    SignalLibrary lib =
        scalar_library({5.0, 5.0, 5.0, 5.0, 5.0}, {8.0, 10.0, 12.0, 14.0, 20.0}, model);
    // all equidistant: k = 2 takes the two lowest ids
    REQUIRE(estimate_u_inf({5.0, 0.0, 0.0}, lib, 2) == Approx(9.0));
}

TEST_CASE("affiliation weights follow the inverse-distance toy example") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({}, {}, model);
    // centroid signals are 1, 3, 10, 20 on the x-axis; probe 1.4 against a
    // rescaled layout: distances to (1,2,4,9) in the hand example scale the
    // same as weights; here use signal 1.5 -> d1 = 0.5, d2 = 1.5
    auto w = affiliate_sensor({1.5, 0.0, 0.0}, lib, model, 2);
    REQUIRE(w.size() == 2);
    REQUIRE(w[0].cluster == 0);
    REQUIRE(w[1].cluster == 1);
    REQUIRE(w[0].weight == Approx(0.75).epsilon(1e-13));
    REQUIRE(w[1].weight == Approx(0.25).epsilon(1e-13));
}

TEST_CASE("affiliation with k = 1 returns the nearest centroid alone") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({}, {}, model);
    auto w = affiliate_sensor({9.0, 0.0, 0.0}, lib, model, 1);
    REQUIRE(w.size() == 1);
    REQUIRE(w[0].cluster == 2);
    REQUIRE(w[0].weight == 1.0);
}

TEST_CASE("an exact centroid-signal match collapses to weight one") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({}, {}, model);
    auto w = affiliate_sensor({10.0, 0.0, 0.0}, lib, model, 2);
    REQUIRE(w.size() == 1);
    REQUIRE(w[0].cluster == 2);
    REQUIRE(w[0].weight == 1.0);
}

TEST_CASE("affiliation k outside {1,2} and K < 4 with k = 2 are rejected") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({}, {}, model);
    REQUIRE_THROWS_AS(affiliate_sensor({1.0, 0, 0}, lib, model, 3), config_error);

    // drop to K = 3 signals
    lib.centroid_signals.pop_back();
    REQUIRE_THROWS_AS(affiliate_sensor({1.0, 0, 0}, lib, model, 2), config_error);
}

TEST_CASE("k = 1 replay on K = M training data recovers stored affiliations") {
    GenConfig cfg = mini_cfg(8);
    cfg.reynolds_eps = 0.0;
    auto [train, test] = generate_dataset(cfg);
    auto subs = default_subdomains(0.5);
    const int K = 8;  // centroids are the snapshots themselves
    ClusterModel model = fit_clusters(train, subs, K, 3, 0.5);
    SensorSpec sensor = make_sensor({-0.6, -0.55, 2.2}, subs);
    SignalLibrary lib = build_signal_library(model, train, sensor);

    for (std::size_t m = 0; m < train.size(); ++m) {
        const Vec3 s = sample_velocity(train.snapshots[m].field, sensor.location);
        const Vec3 s_plus = s / train.snapshots[m].mu.u_inf;
        auto w = affiliate_sensor(s_plus, lib, model, 1);
        REQUIRE(w[0].cluster == model.subdomain(1).affiliations[m]);
    }
}

TEST_CASE("point estimation composes propagation and expectation") {
    ClusterModel model = toy_model();
    // training signal (15,0,0) at u_inf 10 gives an exact u_inf estimate
    SignalLibrary lib = scalar_library({15.0}, {10.0}, model);

    InferenceMatrix P;
    P.source_sub = 1;
    P.target_sub = 2;
    P.K = 4;
    P.p.assign(16, 0.0);
    P.at(0, 0) = 1.0;
    P.at(0, 1) = 0.2;
    P.at(1, 1) = 0.8;
    P.at(2, 2) = 1.0;
    P.at(3, 3) = 1.0;
    InferenceSet matrices;
    matrices.matrices.push_back(P);

    // signal 15 at u_inf_hat 10 -> signal+ = 1.5 -> weights (0.75, 0.25)
    EstimatorOptions opts;
    opts.affiliation_k = 2;
    opts.u_inf_k = 1;
    const Vec3 point{3.5, 1.0, 1.0};
    PointEstimate pe = estimate_at_point(model, matrices, lib, {15.0, 0.0, 0.0}, point, opts);

    REQUIRE(pe.target_sub == 2);
    REQUIRE(pe.q[0] == Approx(0.8).epsilon(1e-13));
    REQUIRE(pe.q[1] == Approx(0.2).epsilon(1e-13));
    REQUIRE(pe.velocity.x == Approx(8.0).epsilon(1e-12));
    REQUIRE(pe.velocity.y == Approx(2.0).epsilon(1e-12));
    REQUIRE(pe.velocity.z == Approx(0.0).margin(1e-12));
}

TEST_CASE("identity propagation inside the sensor subdomain") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({10.0}, {10.0}, model);
    EstimatorOptions opts;
    opts.affiliation_k = 1;
    opts.u_inf_k = 1;
    InferenceSet empty;

    // signal+ = 1.0 matches centroid 0 exactly; point inside subdomain 1
    PointEstimate pe =
        estimate_at_point(model, empty, lib, {10.0, 0.0, 0.0}, {0.5, 1.0, 1.0}, opts);
    REQUIRE(pe.target_sub == 1);
    REQUIRE(pe.q[0] == 1.0);
    // centroid 0 of subdomain 1 is (1,0,0), u_inf_hat = 10
    REQUIRE(pe.velocity.x == Approx(10.0).epsilon(1e-13));
}

TEST_CASE("all-zero target centroids give a zero estimate") {
    ClusterModel model = toy_model();
    for (VelocityField& c : model.subdomains[1].centroids)
        for (double& v : c.values) v = 0.0;
    SignalLibrary lib = scalar_library({15.0}, {10.0}, model);
    InferenceMatrix P;
    P.source_sub = 1;
    P.target_sub = 2;
    P.K = 4;
    P.p.assign(16, 0.0);
    for (int i = 0; i < 4; ++i) P.at(i, i) = 1.0;
    InferenceSet matrices;
    matrices.matrices.push_back(P);
    EstimatorOptions opts;
    opts.affiliation_k = 2;
    opts.u_inf_k = 1;
    PointEstimate pe =
        estimate_at_point(model, matrices, lib, {15.0, 0.0, 0.0}, {3.5, 1.0, 1.0}, opts);
    REQUIRE(pe.velocity == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("points outside all subdomains are out of scope") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({10.0}, {10.0}, model);
    EstimatorOptions opts;
    opts.affiliation_k = 1;
    opts.u_inf_k = 1;
    InferenceSet empty;
    REQUIRE_THROWS_AS(
        estimate_at_point(model, empty, lib, {10.0, 0, 0}, {2.5, 1.0, 1.0}, opts),
        data_error);
}

TEST_CASE("trajectory construction rejects out-of-domain samples") {
    auto subs = default_subdomains(0.5);
    REQUIRE_THROWS_AS(
        line_trajectory({-1.5, 0.0, 0.5}, {1.5, 0.0, 0.5}, 11, subs), data_error);
    Trajectory ok = line_trajectory({-1.0, 0.0, 0.5}, {1.0, 0.0, 0.5}, 11, subs);
    REQUIRE(ok.n_samples() == 11);
    REQUIRE(ok.beta(10) == 1.0);
}

TEST_CASE("trajectory error closed forms") {
    GenConfig cfg = mini_cfg(1);
    cfg.noise_sigma = 0.0;
    auto [train, test] = generate_dataset(cfg);
    const Snapshot& truth = train.snapshots[0];
    auto subs = default_subdomains(0.5);
    Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, 41, subs);

    std::vector<Vec3> exact, scaled;
    for (const Vec3& p : traj.points) {
        const Vec3 u = sample_velocity(truth.field, p);
        exact.push_back(u);
        scaled.push_back(0.8 * u);
    }
    REQUIRE(trajectory_error(exact, truth, traj) == Approx(0.0).margin(1e-12));
    REQUIRE(trajectory_error(scaled, truth, traj) == Approx(20.0).epsilon(1e-12));
}

TEST_CASE("trapezoid error converges against an oversampled oracle") {
    GenConfig cfg = mini_cfg(2);
    cfg.noise_sigma = 0.0;  // smooth fields
    auto [train, test] = generate_dataset(cfg);
    const Snapshot& truth = train.snapshots[0];
    const Snapshot& other = train.snapshots[1];
    auto subs = default_subdomains(0.5);

    auto error_at = [&](int n) {
        Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, n, subs);
        std::vector<Vec3> est;
        for (const Vec3& p : traj.points) est.push_back(sample_velocity(other.field, p));
        return trajectory_error(est, truth, traj);
    };
    const double coarse = error_at(51);
    const double fine = error_at(101);
    const double oracle = error_at(1010);
    REQUIRE(std::abs(fine - oracle) < 0.5);
    REQUIRE(std::abs(coarse - fine) < 0.5);
}

TEST_CASE("zero truth along the trajectory is undefined") {
    GenConfig cfg = mini_cfg(1);
    auto [train, test] = generate_dataset(cfg);
    Snapshot truth = train.snapshots[0];
    for (double& v : truth.field.values) v = 0.0;
    auto subs = default_subdomains(0.5);
    Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, 11, subs);
    std::vector<Vec3> est(11, Vec3{1.0, 0.0, 0.0});
    REQUIRE_THROWS_AS(trajectory_error(est, truth, traj), numeric_error);
}

TEST_CASE("average error over a dataset is consistent with its table") {
    GenConfig cfg = mini_cfg(10);
    auto [train, test] = generate_dataset(cfg);
    auto subs = default_subdomains(0.5);
    ClusterModel model = fit_clusters(train, subs, 5, 2, 0.5);
    InferenceSet matrices = build_all_matrices(model);
    SensorSpec sensor = make_sensor({-0.6, -0.55, 2.2}, subs);
    SignalLibrary lib = build_signal_library(model, train, sensor);
    Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, 21, subs);

    EstimatorOptions opts;
    opts.affiliation_k = 2;
    opts.u_inf_k = 4;
    ErrorTable table = average_error(model, matrices, lib, train, traj, opts);
    REQUIRE(table.percent.size() == train.size());
    REQUIRE(table.n_failed == 0);
    double mean = 0.0;
    for (double e : table.percent) mean += e;
    mean /= static_cast<double>(table.percent.size());
    REQUIRE(table.average == Approx(mean).epsilon(1e-12));

    // single-snapshot dataset equals that snapshot's error
    Dataset one;
    one.role = DatasetRole::train;
    one.snapshots.push_back(train.snapshots[3]);
    ErrorTable single = average_error(model, matrices, lib, one, traj, opts);
    REQUIRE(single.average == Approx(table.percent[3]).epsilon(1e-12));
}

TEST_CASE("q stays a probability distribution along trajectories") {
    GenConfig cfg = mini_cfg(12);
    auto [train, test] = generate_dataset(cfg);
    auto subs = default_subdomains(0.5);
    ClusterModel model = fit_clusters(train, subs, 5, 9, 0.5);
    InferenceSet matrices = build_all_matrices(model);
    SensorSpec sensor = make_sensor({0.8, 0.2, 1.7}, subs);  // subdomain 2
    SignalLibrary lib = build_signal_library(model, train, sensor);
    Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, 31, subs);

    const Vec3 signal = sample_velocity(train.snapshots[7].field, sensor.location);
    TrajectoryEstimate est = estimate_trajectory(model, matrices, lib, signal, traj,
                                                 EstimatorOptions{2, 4});
    for (const PointEstimate& pe : est.points) {
        double sum = 0.0;
        for (double q : pe.q) {
            REQUIRE(q >= 0.0);
            sum += q;
        }
        REQUIRE(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("u_inf kNN validates k and the library") {
    ClusterModel model = toy_model();
    SignalLibrary lib = scalar_library({4.0, 5.0}, {8.0, 10.0}, model);
    REQUIRE_THROWS_AS(estimate_u_inf({5.0, 0, 0}, lib, 0), config_error);
    REQUIRE_THROWS_AS(estimate_u_inf({5.0, 0, 0}, lib, 3), config_error);
    SignalLibrary empty = scalar_library({}, {}, model);
    REQUIRE_THROWS_AS(estimate_u_inf({5.0, 0, 0}, empty, 1), data_error);
}

TEST_CASE("per-snapshot failures are collected, not fatal") {
    GenConfig cfg = mini_cfg(6);
    auto [train, test] = generate_dataset(cfg);
    auto subs = default_subdomains(0.5);
    ClusterModel model = fit_clusters(train, subs, 4, 2, 0.5);
    InferenceSet matrices = build_all_matrices(model);
    SensorSpec sensor = make_sensor({-0.6, -0.55, 2.2}, subs);
    SignalLibrary lib = build_signal_library(model, train, sensor);
    Trajectory traj = line_trajectory({-0.9, 0.0, 0.5}, {0.9, 0.0, 0.5}, 11, subs);

    Dataset probe = train;
    for (double& v : probe.snapshots[2].field.values) v = 0.0;  // undefined truth
    EstimatorOptions opts;
    ErrorTable table = average_error(model, matrices, lib, probe, traj, opts);
    REQUIRE(table.n_failed == 1);
    REQUIRE(std::isnan(table.percent[2]));
    REQUIRE(table.failures.size() == 1);
    REQUIRE(table.percent.size() == probe.size());
}
