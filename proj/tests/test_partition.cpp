#include <catch2/catch.hpp>

#include "uwind/partition.hpp"

using namespace uwind;

namespace {

GridSpec desk_grid(double L) {
    GridSpec g;
    g.origin = {-4.0 * L, -4.0 * L, 0.0};
    g.spacing = {0.5 * L, 0.5 * L, 0.5 * L};
    g.dims = {17, 17, 13};
    return g;
}

} // namespace

TEST_CASE("default subdomain geometry at L = 0.5 m") {
    const double L = 0.5;
    auto subs = default_subdomains(L);
    REQUIRE(subs.size() == 3);

    // tallest to shortest: indices 1, 2, 3
    REQUIRE(subs[0].index == 1);
    REQUIRE(subs[1].index == 2);
    REQUIRE(subs[2].index == 3);

    // first box spans x in [-2L, 0] = [-1, 0] m, z in [0, 5L] = [0, 2.5] m
    REQUIRE(subs[0].box.lo.x == Approx(-1.0));
    REQUIRE(subs[0].box.hi.x == Approx(0.0));
    REQUIRE(subs[0].box.lo.z == 0.0);
    REQUIRE(subs[0].box.hi.z == Approx(2.5));

    REQUIRE(subs[1].box.hi.z == Approx(4.0 * L));
    REQUIRE(subs[2].box.hi.z == Approx(3.0 * L));
}

TEST_CASE("subdomain boxes touch at most on boundaries") {
    // interval arithmetic oracle: interiors of the three boxes are disjoint
    auto subs = default_subdomains(0.5);
    for (std::size_t a = 0; a < subs.size(); ++a)
        for (std::size_t b = a + 1; b < subs.size(); ++b) {
            const Box& A = subs[a].box;
            const Box& B = subs[b].box;
            const double ox = std::min(A.hi.x, B.hi.x) - std::max(A.lo.x, B.lo.x);
            const double oy = std::min(A.hi.y, B.hi.y) - std::max(A.lo.y, B.lo.y);
            // overlap has zero volume: at least one axis only touches
            REQUIRE(std::min(ox, oy) <= 0.0);
        }
}

TEST_CASE("restriction selects boundary-inclusive node counts") {
    const double L = 0.5;
    GridSpec g = desk_grid(L);
    VelocityField f = VelocityField::zeros(g);
    auto subs = default_subdomains(L);
    VelocityField r = restrict_field(f, subs[0]);
    // x,y in [-2L,0] at 0.5L spacing -> 5 nodes, z in [0,5L] -> 11 nodes
    REQUIRE(r.grid.dims == std::array<int, 3>{5, 5, 11});
    REQUIRE(r.values.size() == 3u * 5u * 5u * 11u);
}

TEST_CASE("restriction preserves constants and node identity") {
    const double L = 0.5;
    GridSpec g = desk_grid(L);
    VelocityField f = VelocityField::zeros(g);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) f.set(i, j, k, {3.0, -1.0, 2.0});
    auto subs = default_subdomains(L);
    VelocityField r = restrict_field(f, subs[1]);
    for (int k = 0; k < r.grid.dims[2]; ++k)
        for (int j = 0; j < r.grid.dims[1]; ++j)
            for (int i = 0; i < r.grid.dims[0]; ++i)
                REQUIRE(r.at(i, j, k) == Vec3{3.0, -1.0, 2.0});
}

TEST_CASE("restriction is grid-determined and idempotent") {
    const double L = 0.5;
    GridSpec g = desk_grid(L);
    auto subs = default_subdomains(L);

    VelocityField f1 = VelocityField::zeros(g);
    VelocityField f2 = VelocityField::zeros(g);
    for (std::size_t n = 0; n < f2.values.size(); ++n) f2.values[n] = double(n % 7);

    VelocityField r1 = restrict_field(f1, subs[2]);
    VelocityField r2 = restrict_field(f2, subs[2]);
    REQUIRE(r1.grid == r2.grid);  // identical node selections across snapshots

    VelocityField rr = restrict_field(r2, subs[2].box);
    REQUIRE(rr.grid == r2.grid);
    REQUIRE(rr.values == r2.values);
}

TEST_CASE("restriction with no nodes inside fails") {
    GridSpec g = desk_grid(0.5);
    VelocityField f = VelocityField::zeros(g);
    Box far{{100.0, 100.0, 100.0}, {101.0, 101.0, 101.0}};
    REQUIRE_THROWS_AS(restrict_field(f, far), data_error);
}

TEST_CASE("locate resolves interior, outside, and boundary points") {
    const double L = 0.5;
    auto subs = default_subdomains(L);

    REQUIRE(locate({-L, -L, 0.5 * L}, subs) == 1);
    REQUIRE_FALSE(locate({0.0, 0.0, 10.0 * L}, subs).has_value());

    // x = 0, y = 0 lies on the boundary of all three boxes -> lowest index
    REQUIRE(locate({0.0, 0.0, 0.5 * L}, subs) == 1);
    // y = 0 at x > 0 is interior to subdomain 2 only
    REQUIRE(locate({L, 0.0, 0.5 * L}, subs) == 2);
    // shared face between 2 and 3 at x = 0, y in (0, L]
    REQUIRE(locate({0.0, 0.5 * L, 0.5 * L}, subs) == 2);
}

TEST_CASE("no grid node belongs to two subdomain interiors") {
    const double L = 0.5;
    GridSpec g = desk_grid(L);
    auto subs = default_subdomains(L);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const Vec3 p = g.node_pos(i, j, k);
                int strictly_inside = 0;
                for (const Subdomain& s : subs) {
                    if (p.x > s.box.lo.x && p.x < s.box.hi.x && p.y > s.box.lo.y &&
                        p.y < s.box.hi.y && p.z > s.box.lo.z && p.z < s.box.hi.z)
                        ++strictly_inside;
                }
                REQUIRE(strictly_inside <= 1);
            }
}
