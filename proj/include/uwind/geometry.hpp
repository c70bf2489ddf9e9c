#pragma once

#include <array>
#include <cmath>

namespace uwind {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    bool operator==(const Vec3& o) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Axis-aligned box, closed on all faces.
struct Box {
    Vec3 lo;
    Vec3 hi;

    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x &&
               p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }

    bool intersects(const Box& o) const {
        return lo.x <= o.hi.x && hi.x >= o.lo.x &&
               lo.y <= o.hi.y && hi.y >= o.lo.y &&
               lo.z <= o.hi.z && hi.z >= o.lo.z;
    }

    bool operator==(const Box& o) const = default;
};

} // namespace uwind
