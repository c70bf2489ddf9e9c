#include <catch2/catch.hpp>

#include <cmath>

#include "uwind/field.hpp"
#include "uwind/rng.hpp"

using namespace uwind;

namespace {

VelocityField constant_field(const GridSpec& g, const Vec3& v) {
    VelocityField f = VelocityField::zeros(g);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) f.set(i, j, k, v);
    return f;
}

GridSpec unit_grid(int n = 4) {
    GridSpec g;
    g.origin = {0.0, 0.0, 0.0};
    g.spacing = {1.0, 1.0, 1.0};
    g.dims = {n, n, n};
    return g;
}

VelocityField random_field(const GridSpec& g, SplitMix64& rng) {
    VelocityField f = VelocityField::zeros(g);
    for (double& v : f.values) v = 2.0 * rng.uniform01() - 1.0;
    return f;
}

} // namespace

TEST_CASE("normalize divides componentwise by u_inf") {
    GridSpec g = unit_grid(3);
    Snapshot snap{1, {8.0, 0.0}, constant_field(g, {4.0, -2.0, 1.0})};
    VelocityField plus = normalize_snapshot(snap);
    REQUIRE(plus.dimensionless);
    REQUIRE(plus.at(1, 1, 1) == Vec3{0.5, -0.25, 0.125});
    // input unchanged
    REQUIRE(snap.field.at(0, 0, 0) == Vec3{4.0, -2.0, 1.0});
    REQUIRE_FALSE(snap.field.dimensionless);
}

TEST_CASE("normalize of a zero field is zero") {
    Snapshot snap{1, {10.0, 0.0}, constant_field(unit_grid(3), {0, 0, 0})};
    VelocityField plus = normalize_snapshot(snap);
    for (double v : plus.values) REQUIRE(v == 0.0);
}

TEST_CASE("normalize is linear in 1/u_inf") {
    GridSpec g = unit_grid(3);
    Snapshot a{1, {10.0, 0.0}, constant_field(g, {3.0, 1.0, -2.0})};
    Snapshot b{2, {20.0, 0.0}, a.field};
    VelocityField pa = normalize_snapshot(a);
    VelocityField pb = normalize_snapshot(b);
    for (std::size_t n = 0; n < pa.values.size(); ++n)
        REQUIRE(pb.values[n] == Approx(0.5 * pa.values[n]).margin(0.0));
}

TEST_CASE("normalize rejects non-positive u_inf") {
    Snapshot snap{1, {0.0, 0.0}, constant_field(unit_grid(3), {1, 0, 0})};
    REQUIRE_THROWS_AS(normalize_snapshot(snap), data_error);
}

TEST_CASE("normalize then rescale reproduces the original field") {
    SplitMix64 rng(11);
    GridSpec g = unit_grid(4);
    Snapshot snap{3, {13.7, 42.0}, random_field(g, rng)};
    for (double& v : snap.field.values) v *= 9.0;
    VelocityField plus = normalize_snapshot(snap);
    for (std::size_t n = 0; n < plus.values.size(); ++n) {
        const double back = plus.values[n] * snap.mu.u_inf;
        REQUIRE(back == Approx(snap.field.values[n]).epsilon(1e-12));
    }
}

TEST_CASE("sampling preserves a constant field at interior points") {
    VelocityField f = constant_field(unit_grid(4), {1.0, 0.0, 0.0});
    REQUIRE(sample_velocity(f, {1.3, 2.7, 0.4}) == Vec3{1.0, 0.0, 0.0});
}

TEST_CASE("trilinear sampling reproduces linear fields") {
    GridSpec g = unit_grid(4);
    VelocityField f = VelocityField::zeros(g);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) {
                const Vec3 p = g.node_pos(i, j, k);
                f.set(i, j, k, {p.x, 2.0 * p.y - p.z, 0.5 * p.z});
            }
    const Vec3 v = sample_velocity(f, {0.5, 1.25, 2.75});
    REQUIRE(v.x == Approx(0.5).epsilon(1e-14));
    REQUIRE(v.y == Approx(2.0 * 1.25 - 2.75).epsilon(1e-13));
    REQUIRE(v.z == Approx(0.5 * 2.75).epsilon(1e-14));
}

TEST_CASE("sampling at grid nodes is exact") {
    SplitMix64 rng(5);
    GridSpec g;
    g.origin = {-1.0, 0.5, 2.0};
    g.spacing = {0.25, 0.5, 0.125};
    g.dims = {5, 4, 6};
    VelocityField f = random_field(g, rng);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i)
                REQUIRE(sample_velocity(f, g.node_pos(i, j, k)) == f.at(i, j, k));
}

TEST_CASE("sampling outside the bounding box fails") {
    VelocityField f = constant_field(unit_grid(4), {1, 0, 0});
    REQUIRE_THROWS_AS(sample_velocity(f, {4.0, 1.0, 1.0}), data_error);
    REQUIRE_THROWS_AS(sample_velocity(f, {1.0, -1.0, 1.0}), data_error);
}

TEST_CASE("hilbert norm of a uniform field is |u| sqrt(n dV)") {
    GridSpec g = unit_grid(4);
    g.spacing = {0.5, 0.5, 0.5};
    VelocityField f = constant_field(g, {2.0, 0.0, 0.0});
    Box region{{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}};  // 8 nodes
    const double dv = 0.125;
    REQUIRE(hilbert_norm(f, region) == Approx(2.0 * std::sqrt(8.0 * dv)).epsilon(1e-13));
}

TEST_CASE("hilbert norm of the zero field is zero") {
    VelocityField f = constant_field(unit_grid(3), {0, 0, 0});
    REQUIRE(hilbert_norm(f) == 0.0);
}

TEST_CASE("hilbert norm on an empty region fails") {
    VelocityField f = constant_field(unit_grid(3), {1, 0, 0});
    Box region{{10.0, 10.0, 10.0}, {11.0, 11.0, 11.0}};
    REQUIRE_THROWS_AS(hilbert_norm(f, region), data_error);
}

TEST_CASE("hilbert norm properties on random fields") {
    SplitMix64 rng(99);
    GridSpec g = unit_grid(4);
    for (int rep = 0; rep < 25; ++rep) {
        VelocityField a = random_field(g, rng);
        VelocityField b = random_field(g, rng);
        const double scale = 0.1 + 5.0 * rng.uniform01();

        // absolute homogeneity
        VelocityField sa = a;
        for (double& v : sa.values) v *= -scale;
        REQUIRE(hilbert_norm(sa) == Approx(scale * hilbert_norm(a)).epsilon(1e-12));

        // triangle inequality
        VelocityField sum = a;
        for (std::size_t n = 0; n < sum.values.size(); ++n) sum.values[n] += b.values[n];
        REQUIRE(hilbert_norm(sum) <=
                hilbert_norm(a) + hilbert_norm(b) + 1e-12);
    }
}

TEST_CASE("doubling all components doubles the norm") {
    SplitMix64 rng(3);
    VelocityField a = random_field(unit_grid(3), rng);
    VelocityField d = a;
    for (double& v : d.values) v *= 2.0;
    REQUIRE(hilbert_norm(d) == Approx(2.0 * hilbert_norm(a)).epsilon(1e-13));
}

TEST_CASE("dataset validation catches mixed grids and emptiness") {
    Dataset empty;
    REQUIRE_THROWS_AS(empty.validate(), data_error);

    Dataset ds;
    ds.snapshots.push_back({1, {10.0, 0.0}, constant_field(unit_grid(3), {1, 0, 0})});
    ds.snapshots.push_back({2, {10.0, 0.0}, constant_field(unit_grid(4), {1, 0, 0})});
    REQUIRE_THROWS_AS(ds.validate(), data_error);
}
