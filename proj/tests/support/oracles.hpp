#pragma once

// Independent distance oracles: nearest-point constructions written without
// reference to the library's closed forms.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "fractalforge/sdf.hpp"

namespace fftest {

using ff::Vec3;

inline double seg_dist2d(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    double t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy);
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - ax - t * dx, py - ay - t * dy);
}

/// Minimises a convex function on [0,1].
inline double ternary_min(const std::function<double(double)>& f) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (f(m1) < f(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return std::min({f(0.0), f(1.0), f(0.5 * (lo + hi))});
}

inline double box_oracle(const Vec3& p, const Vec3& b) {
    const Vec3 q{std::clamp(p.x, -b.x, b.x), std::clamp(p.y, -b.y, b.y), std::clamp(p.z, -b.z, b.z)};
    const double outside = ff::length(p - q);
    if (outside > 0.0) return outside;
    return -std::min({b.x - std::abs(p.x), b.y - std::abs(p.y), b.z - std::abs(p.z)});
}

/// Twelve edge bars; exact for points outside every bar.
inline std::optional<double> box_frame_oracle(const Vec3& p, const Vec3& b, double e) {
    double best = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        for (int s1 = -1; s1 <= 1; s1 += 2) {
            for (int s2 = -1; s2 <= 1; s2 += 2) {
                Vec3 centre{}, half{};
                const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
                half[axis] = b[axis];
                half[a1] = e;
                half[a2] = e;
                centre[a1] = s1 * (b[a1] - e);
                centre[a2] = s2 * (b[a2] - e);
                const double d = box_oracle(p - centre, half);
                if (d <= 0.0) return std::nullopt;
                best = std::min(best, d);
            }
        }
    }
    return best;
}

inline double torus_oracle(const Vec3& p, double major, double minor) {
    // Nearest point on the core circle.
    const double rho = std::hypot(p.x, p.z);
    Vec3 c{major, 0.0, 0.0};
    if (rho > 0.0) c = Vec3{p.x / rho * major, 0.0, p.z / rho * major};
    return ff::length(p - c) - minor;
}

inline double cylinder_oracle(const Vec3& p, double r, double h) {
    const double rho = std::hypot(p.x, p.z);
    const double cr = std::min(rho, r);
    const double cy = std::clamp(p.y, -h, h);
    const double outside = std::hypot(rho - cr, p.y - cy);
    if (outside > 0.0) return outside;
    return -std::min(r - rho, h - std::abs(p.y));
}

/// Union of spheres swept along a segment with linearly varying radius; exact outside.
inline double swept_sphere_oracle(const Vec3& p, const Vec3& a, const Vec3& b, double ra, double rb) {
    return ternary_min([&](double t) { return ff::length(p - (a + (b - a) * t)) - (ra + (rb - ra) * t); });
}

inline Vec3 project_simplex(const Vec3& v, double s) {
    std::array<double, 3> u{v.x, v.y, v.z};
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (int i = 0; i < 3; ++i) {
        cum += u[i];
        const double t = (cum - s) / (i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    return {std::max(v.x - theta, 0.0), std::max(v.y - theta, 0.0), std::max(v.z - theta, 0.0)};
}

inline double octahedron_oracle(const Vec3& p, double s) {
    const Vec3 q = ff::abs(p);
    const double sum = q.x + q.y + q.z;
    if (sum <= s) return (sum - s) / std::sqrt(3.0);
    return ff::length(q - project_simplex(q, s));
}

/// Hexagon in the xy plane with inradius r (flat side facing +y), extruded along z.
inline double hex_prism_oracle(const Vec3& p, double r, double half_length) {
    const double R = 2.0 * r / std::sqrt(3.0);
    bool inside = true;
    double edge = std::numeric_limits<double>::infinity();
    double inner = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 6; ++k) {
        const double an = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
        const double s = std::cos(an) * p.x + std::sin(an) * p.y - r;
        if (s > 0.0) inside = false;
        inner = std::min(inner, -s);
        const double a0 = k * std::numbers::pi / 3.0, a1 = (k + 1) * std::numbers::pi / 3.0;
        edge = std::min(edge, seg_dist2d(p.x, p.y, R * std::cos(a0), R * std::sin(a0), R * std::cos(a1), R * std::sin(a1)));
    }
    const double d2 = inside ? 0.0 : edge;  // planar distance to the solid hexagon
    const double dz = std::max(std::abs(p.z) - half_length, 0.0);
    if (d2 > 0.0 || dz > 0.0) return std::hypot(d2, dz);
    return -std::min(inner, half_length - std::abs(p.z));
}

/// Exact oracle for points outside the primitive; nullopt where none applies.
inline std::optional<double> primitive_oracle(const ff::PrimitiveParams& pp, const Vec3& p) {
    const auto& v = pp.values;
    switch (pp.kind) {
        case ff::PrimitiveKind::Sphere: return ff::length(p) - v[0];
        case ff::PrimitiveKind::Box: return box_oracle(p, {v[0], v[1], v[2]});
        case ff::PrimitiveKind::BoxFrame: return box_frame_oracle(p, {v[0], v[1], v[2]}, v[3]);
        case ff::PrimitiveKind::Torus: return torus_oracle(p, v[0], v[1]);
        case ff::PrimitiveKind::Plane: return ff::dot(p, Vec3{v[0], v[1], v[2]}) + v[3];
        case ff::PrimitiveKind::Cylinder: return cylinder_oracle(p, v[0], v[1]);
        case ff::PrimitiveKind::Capsule: {
            const double d = swept_sphere_oracle(p, {v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6], v[6]);
            if (d <= 0.0) return std::nullopt;
            return d;
        }
        case ff::PrimitiveKind::Octahedron: return octahedron_oracle(p, v[0]);
        case ff::PrimitiveKind::HexPrism: return hex_prism_oracle(p, v[0], v[1]);
        case ff::PrimitiveKind::RoundCone: {
            const double d = swept_sphere_oracle(p, {0, 0, 0}, {0, v[2], 0}, v[0], v[1]);
            if (d <= 0.0) return std::nullopt;
            return d;
        }
    }
    return std::nullopt;
}

}  // namespace fftest
