#pragma once

// Sphere tracing, normals, soft shadows and Blinn-Phong shading. The kernels
// are templates over the map callable (Vec3 -> Sample) so the tracer can be
// driven by the instruction interpreter, the reference tree evaluator, or an
// analytic test scene without indirection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "fractalforge/lighting.hpp"
#include "fractalforge/scene.hpp"

namespace ff {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length

    Vec3 at(double t) const { return origin + dir * t; }
};

struct MarchConfig {
    double min_t = 0.0;
    double max_t = 100.0;
    int max_steps = 256;
    double eps0 = 1e-4;
    /// Half-angle of one pixel's cone in radians; hit threshold grows as eps0 + t * pixel_cone.
    double pixel_cone = 0.0;
    /// When false, primary rays use the constant eps0 and only shadow rays grow their threshold.
    bool dynamic_epsilon = true;
    bool discontinuity_reduction = true;

    double epsilon(double t) const { return dynamic_epsilon ? eps0 + t * pixel_cone : eps0; }
    double shadow_epsilon(double t) const { return eps0 + t * pixel_cone; }
};

struct HitInfo {
    bool hit = false;
    double t = 0.0;
    int steps = 0;
    int material = -1;
};

struct Camera {
    Transform pose;  // scale ignored; camera looks down its local -z
    double fov_y = 0.7853981633974483;
    int width = 256;
    int height = 256;

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y, int width, int height);
    Vec3 forward() const { return rotate(pose.rotation, Vec3{0.0, 0.0, -1.0}); }
};

/// Ray through film coordinates measured in pixels: (0,0) is the top-left corner,
/// (width, height) the bottom-right corner.
Ray ray_through(const Camera& camera, double fx, double fy);
/// Pinhole ray through the centre of pixel (px, py).
Ray generate_ray(const Camera& camera, int px, int py);
/// Half-angle covering one pixel of an image `height` rows tall.
double pixel_cone_angle(double fov_y, int height);

struct NullObserver {
    void operator()(double, double) const {}
};

/// Basic sphere tracing: starting at min_t, step by the returned distance until it
/// falls under the hit threshold, t passes max_t, or max_steps samples were taken.
/// `observe(t, d)` is called once per map evaluation.
template <class Map, class Observer = NullObserver>
HitInfo sphere_trace(const Map& map, const Ray& ray, const MarchConfig& cfg, Observer&& observe = {}) {
    double t = cfg.min_t;
    double prev_t = t;
    double prev_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.max_steps; ++i) {
        const Sample s = map(ray.at(t));
        const double d = s.distance;
        observe(t, d);
        const double eps = cfg.epsilon(t);
        if (d <= eps) {
            double t_hit = t;
            if (cfg.discontinuity_reduction && i > 0 && prev_d > d) {
                // One secant step through the last two samples. The step is bounded by the
                // previous stride so a nearly flat pair cannot fling the hit far ahead.
                const double secant = t + d * (t - prev_t) / (prev_d - d);
                t_hit = std::clamp(secant, prev_t, t + (t - prev_t));
                t_hit = std::clamp(t_hit, cfg.min_t, cfg.max_t);
            }
            return {true, t_hit, i + 1, s.material};
        }
        prev_t = t;
        prev_d = d;
        t += d;
        if (t >= cfg.max_t) return {false, std::isfinite(t) ? t : cfg.max_t, i + 1, -1};
    }
    return {false, t, cfg.max_steps, -1};
}

struct NormalEstimate {
    Vec3 normal;
    bool degenerate = false;
};

/// Tetrahedral finite differences with offset 1e-4 * max(1, |p|).
template <class Map>
NormalEstimate estimate_normal(const Map& map, const Vec3& p) {
    const double h = 1e-4 * std::max(1.0, length(p));
    const Vec3 k0{1.0, -1.0, -1.0};
    const Vec3 k1{-1.0, -1.0, 1.0};
    const Vec3 k2{-1.0, 1.0, -1.0};
    const Vec3 k3{1.0, 1.0, 1.0};
    const Vec3 g = k0 * map(p + k0 * h).distance + k1 * map(p + k1 * h).distance +
                   k2 * map(p + k2 * h).distance + k3 * map(p + k3 * h).distance;
    const double len = length(g);
    if (!(len >= 1e-12) || !std::isfinite(len)) return {Vec3{0.0, 0.0, 0.0}, true};
    return {g / len, false};
}

/// Penumbra estimate towards a light, using the previous sample to locate the
/// closest approach of the shadow ray. 1 is fully lit, 0 fully occluded.
template <class Map>
double soft_shadow(const Map& map, const Vec3& p, const Vec3& light_dir, double k, const MarchConfig& cfg,
                   double t_max) {
    double res = 1.0;
    double prev = 1e20;
    double t = 0.0;
    for (int i = 0; i < cfg.max_steps; ++i) {
        const double h = map(p + light_dir * t).distance;
        if (!std::isfinite(h)) break;
        if (h < cfg.shadow_epsilon(t)) return 0.0;
        const double y = h * h / (2.0 * prev);
        const double dist = std::sqrt(std::max(0.0, h * h - y * y));
        const double denom = t - y;
        if (denom > 0.0) res = std::min(res, k * dist / denom);
        prev = h;
        t += h;
        if (t >= t_max) break;
    }
    return std::clamp(res, 0.0, 1.0);
}

/// Direction towards the light and the distance at which shadow rays stop.
struct LightSample {
    Vec3 dir;
    double distance;
};
LightSample light_sample(const Light& light, const Vec3& p, double max_t);

/// ambient*albedo + sum over lights of shadow * (diffuse + specular) * color * intensity,
/// clamped to [0,1]. `view` is the incoming ray direction.
Vec3 blinn_phong(const Vec3& p, const Vec3& normal, const Vec3& view, const Material& material,
                 const LightingConfig& lighting, std::span<const double> shadows);

template <class Map>
Vec3 shade(const Map& map, const Vec3& p, const Vec3& normal, const Vec3& view, const Material& material,
           const LightingConfig& lighting, const MarchConfig& cfg, double hit_t) {
    constexpr size_t kInline = 8;
    double inline_shadows[kInline];
    std::vector<double> heap;
    double* shadows = inline_shadows;
    if (lighting.lights.size() > kInline) {
        heap.resize(lighting.lights.size());
        shadows = heap.data();
    }
    const Vec3 origin = p + normal * (2.0 * cfg.epsilon(hit_t));
    for (size_t i = 0; i < lighting.lights.size(); ++i) {
        const LightSample ls = light_sample(lighting.lights[i], p, cfg.max_t);
        shadows[i] = dot(normal, ls.dir) > 0.0
                         ? soft_shadow(map, origin, ls.dir, lighting.shadow_sharpness, cfg, ls.distance)
                         : 0.0;
    }
    return blinn_phong(p, normal, view, material, lighting, {shadows, lighting.lights.size()});
}

}  // namespace ff
