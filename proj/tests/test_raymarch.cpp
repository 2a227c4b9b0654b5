#include "fractalforge/raymarch.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <optional>

#include "support/generators.hpp"

using namespace ff;

namespace {

struct SphereMap {
    Vec3 centre;
    double r;
    Sample operator()(const Vec3& p) const { return {length(p - centre) - r, 0}; }
};

// Smallest non-negative root of |o + t d - c|^2 = r^2.
std::optional<double> ray_sphere(const Ray& ray, const Vec3& c, double r) {
    const Vec3 oc = ray.origin - c;
    const double b = dot(oc, ray.dir);
    const double cc = dot(oc, oc) - r * r;
    const double disc = b * b - cc;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    const double t0 = -b - s;
    if (t0 >= 0.0) return t0;
    const double t1 = -b + s;
    if (t1 >= 0.0) return 0.0;  // origin inside
    return std::nullopt;
}

double angle_deg(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST(SphereTrace, AgreesWithQuadraticRoot) {
    fftest::Gen g(21);
    MarchConfig cfg;
    cfg.max_steps = 512;
    int hits = 0;
    int grazing = 0;
    for (int i = 0; i < 5000; ++i) {
        const SphereMap map{g.vec(-1.0, 1.0), g.uniform(0.2, 1.5)};
        Ray ray{g.unit() * g.uniform(4.0, 8.0), {}};
        // Aim near the sphere so roughly half the rays hit.
        ray.dir = normalize(map.centre + g.vec(-2.0, 2.0) - ray.origin);
        const auto expected = ray_sphere(ray, map.centre, map.r);
        const HitInfo h = sphere_trace(map, ray, cfg);
        // Depth of the ray's closest approach inside the sphere; small values are grazing.
        const Vec3 closest = ray.at(std::max(0.0, dot(map.centre - ray.origin, ray.dir)));
        const double depth = map.r - length(closest - map.centre);
        if (h.hit != expected.has_value()) {
            EXPECT_LT(std::abs(depth), 1e-3);
            continue;
        }
        if (h.hit) {
            ++hits;
            if (std::abs(h.t - *expected) <= std::max(1e-3, cfg.epsilon(h.t))) continue;
            // Near grazing the whole eps-shell is a legitimate stopping region.
            const auto shell = ray_sphere(ray, map.centre, map.r + cfg.epsilon(h.t));
            ASSERT_TRUE(shell.has_value());
            EXPECT_GE(h.t, *shell - 1e-12) << "depth " << depth;
            EXPECT_LE(h.t, *expected + 1e-12) << "depth " << depth;
            ++grazing;
        }
    }
    EXPECT_GT(hits, 1000);
    EXPECT_LT(grazing * 100, hits);
}

TEST(SphereTrace, StepsIncreaseAndNeverOvershoot) {
    fftest::Gen g(5);
    fftest::Gen::TreeOptions o;
    o.allow_repeat = false;
    o.ifs = false;
    for (int n = 0; n < 40; ++n) {
        const SceneTree tree = g.tree(o);
        const auto map = [&](const Vec3& p) { return eval_tree(tree, p); };
        MarchConfig cfg;
        cfg.discontinuity_reduction = false;
        for (int i = 0; i < 50; ++i) {
            const Ray ray{g.unit() * 6.0, normalize(g.vec(-1.0, 1.0) - g.unit() * 6.0)};
            std::vector<std::pair<double, double>> samples;
            const HitInfo h = sphere_trace(map, ray, cfg, [&](double t, double d) { samples.emplace_back(t, d); });
            ASSERT_EQ(static_cast<int>(samples.size()), h.steps);
            for (size_t k = 1; k < samples.size(); ++k) {
                ASSERT_GT(samples[k].first, samples[k - 1].first);
                // Each step is the previous distance exactly.
                ASSERT_EQ(samples[k].first, samples[k - 1].first + samples[k - 1].second);
            }
            // Before the final sample the field stays positive along every step taken.
            for (size_t k = 0; k + 1 < samples.size(); ++k) {
                const auto [t, d] = samples[k];
                ASSERT_GT(d, cfg.epsilon(t));
                for (int j = 1; j <= 8; ++j) ASSERT_GT(map(ray.at(t + d * j / 8.0)).distance, -1e-12);
            }
        }
    }
}

TEST(SphereTrace, NeverPassesAnalyticSurface) {
    fftest::Gen g(6);
    MarchConfig cfg;
    for (int i = 0; i < 2000; ++i) {
        const SphereMap map{g.vec(-1.0, 1.0), g.uniform(0.2, 1.5)};
        const Ray ray{g.unit() * 6.0, normalize(map.centre + g.vec(-1.0, 1.0) - g.unit() * 6.0)};
        const auto expected = ray_sphere(ray, map.centre, map.r);
        if (!expected) continue;
        sphere_trace(map, ray, cfg, [&](double t, double) { ASSERT_LE(t, *expected + 1e-12); });
    }
}

TEST(SphereTrace, MissesAndLimits) {
    const SphereMap map{{0.0, 0.0, 0.0}, 1.0};
    MarchConfig cfg;
    const HitInfo miss = sphere_trace(map, Ray{{0.0, 5.0, 5.0}, {0.0, 0.0, -1.0}}, cfg);
    EXPECT_FALSE(miss.hit);
    EXPECT_GE(miss.t, cfg.max_t);

    cfg.max_steps = 2;
    const HitInfo capped = sphere_trace(map, Ray{{0.0, 0.0, 10.0}, {0.0, 0.0, -1.0}}, cfg);
    EXPECT_TRUE(capped.hit);  // the first step lands exactly on the surface
    EXPECT_EQ(capped.steps, 2);

    const SceneTree empty;
    const HitInfo none = sphere_trace([&](const Vec3& p) { return eval_tree(empty, p); },
                                      Ray{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}, MarchConfig{});
    EXPECT_FALSE(none.hit);
    EXPECT_EQ(none.steps, 1);
}

TEST(SphereTrace, DynamicEpsilonGrowsWithDistance) {
    MarchConfig cfg;
    cfg.pixel_cone = 1e-3;
    EXPECT_DOUBLE_EQ(cfg.epsilon(10.0), 1e-4 + 1e-2);
    cfg.dynamic_epsilon = false;
    EXPECT_DOUBLE_EQ(cfg.epsilon(10.0), 1e-4);
    EXPECT_DOUBLE_EQ(cfg.shadow_epsilon(10.0), 1e-4 + 1e-2);
}

TEST(Normals, MatchCentralDifferencesPerPrimitive) {
    fftest::Gen g(9);
    for (int k = 1; k <= kPrimitiveKindCount; ++k) {
        const auto kind = static_cast<PrimitiveKind>(k);
        int checked = 0;
        for (int attempt = 0; attempt < 20000 && checked < 300; ++attempt) {
            const PrimitiveParams params = g.params(kind);
            const auto map = [&](const Vec3& p) { return Sample{evaluate_primitive(params, p), 0}; };
            // Project a random point onto the surface along the field gradient.
            Vec3 p = g.vec(-1.5, 1.5);
            const double h = 1e-6;
            const auto central = [&](const Vec3& x) {
                return Vec3{map(x + Vec3{h, 0, 0}).distance - map(x - Vec3{h, 0, 0}).distance,
                            map(x + Vec3{0, h, 0}).distance - map(x - Vec3{0, h, 0}).distance,
                            map(x + Vec3{0, 0, h}).distance - map(x - Vec3{0, 0, h}).distance} /
                       (2.0 * h);
            };
            for (int it = 0; it < 8; ++it) {
                const Vec3 grad = central(p);
                if (length(grad) < 1e-9) break;
                p = p - normalize(grad) * map(p).distance;
            }
            if (std::abs(map(p).distance) > 1e-7) continue;
            // Skip creases: across an edge the gradient jumps by tens of degrees, while
            // curvature alone turns it by well under 2 degrees over this radius.
            const double r = 1e-3 * std::max(1.0, length(p));
            const Vec3 c = normalize(central(p));
            bool smooth = true;
            for (const Vec3& off : {Vec3{r, 0, 0}, Vec3{0, r, 0}, Vec3{0, 0, r}, Vec3{-r, 0, 0}, Vec3{0, -r, 0},
                                    Vec3{0, 0, -r}}) {
                if (angle_deg(normalize(central(p + off)), c) > 2.0) smooth = false;
            }
            if (!smooth) continue;
            const NormalEstimate n = estimate_normal(map, p);
            ASSERT_FALSE(n.degenerate);
            EXPECT_LT(angle_deg(n.normal, c), 0.1) << to_string(kind);
            ++checked;
        }
        EXPECT_GE(checked, 100) << to_string(kind);
    }
}

TEST(Normals, DegenerateFieldIsReported) {
    const auto flat = [](const Vec3&) { return Sample{1.0, 0}; };
    EXPECT_TRUE(estimate_normal(flat, {0, 0, 0}).degenerate);
}

TEST(Shadow, OccluderDarkensAndDistanceLightens) {
    // Ground at y = 0 and a sphere hovering above the origin; light straight up.
    const auto map_for = [](double height) {
        return [height](const Vec3& p) {
            return Sample{std::min(p.y, length(p - Vec3{0.0, height, 0.0}) - 0.5), 0};
        };
    };
    MarchConfig cfg;
    const Vec3 up{0.0, 1.0, 0.0};
    const Vec3 p{0.0, 1e-3, 0.0};
    EXPECT_EQ(soft_shadow(map_for(2.0), p, up, 8.0, cfg, 50.0), 0.0);
    const auto open = [](const Vec3& q) { return Sample{q.y, 0}; };
    EXPECT_DOUBLE_EQ(soft_shadow(open, p, up, 8.0, cfg, 50.0), 1.0);

    // Sliding the receiver out from under the occluder never darkens it.
    double prev = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const Vec3 q{0.05 * i, 1e-3, 0.0};
        const double s = soft_shadow(map_for(2.0), q, up, 8.0, cfg, 50.0);
        EXPECT_GE(s, prev - 1e-12);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        prev = s;
    }
    EXPECT_GT(prev, 0.9);
}

TEST(Shading, BlinnPhongTerms) {
    Material m;
    m.albedo = {0.5, 0.5, 0.5};
    m.specular = {0.0, 0.0, 0.0};
    LightingConfig l;
    l.ambient = {0.1, 0.1, 0.1};
    l.lights = {Light{Light::Type::Directional, {0.0, 1.0, 0.0}, {1.0, 1.0, 1.0}, 1.0}};
    const Vec3 n{0.0, 1.0, 0.0};
    const double lit[] = {1.0};
    const double dark[] = {0.0};
    const Vec3 c = blinn_phong({0, 0, 0}, n, {0.0, -1.0, 0.0}, m, l, lit);
    EXPECT_NEAR(c.x, 0.1 * 0.5 + 0.5, 1e-12);
    const Vec3 shadowed = blinn_phong({0, 0, 0}, n, {0.0, -1.0, 0.0}, m, l, dark);
    EXPECT_NEAR(shadowed.x, 0.05, 1e-12);

    // Light at 60 degrees: Lambert cosine 0.5.
    l.lights[0].vector = normalize(Vec3{std::sqrt(3.0), 1.0, 0.0});
    EXPECT_NEAR(blinn_phong({0, 0, 0}, n, {0.0, -1.0, 0.0}, m, l, lit).x, 0.05 + 0.5 * 0.5, 1e-12);

    // Specular peaks on the mirror direction.
    m.specular = {1.0, 1.0, 1.0};
    m.shininess = 16.0;
    l.lights[0].vector = {0.0, 1.0, 0.0};
    const Vec3 mirror = blinn_phong({0, 0, 0}, n, {0.0, -1.0, 0.0}, m, l, lit);
    const Vec3 off = blinn_phong({0, 0, 0}, n, normalize(Vec3{1.0, -1.0, 0.0}), m, l, lit);
    EXPECT_GT(mirror.x, off.x);
    EXPECT_LE(mirror.x, 1.0);
}

TEST(Shading, PointLightFalloffDirection) {
    Light pl{Light::Type::Point, {0.0, 4.0, 0.0}, {1.0, 1.0, 1.0}, 1.0};
    const LightSample s = light_sample(pl, {0.0, 1.0, 0.0}, 100.0);
    EXPECT_NEAR(s.dir.y, 1.0, 1e-15);
    EXPECT_NEAR(s.distance, 3.0, 1e-12);
    Light dl{Light::Type::Directional, {1.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 1.0};
    const LightSample d = light_sample(dl, {0.0, 0.0, 0.0}, 100.0);
    EXPECT_EQ(d.dir, (Vec3{1.0, 0.0, 0.0}));
    EXPECT_EQ(d.distance, 100.0);
}

TEST(Camera, RaysThroughPixelCentres) {
    const Camera cam = Camera::look_at({0.0, 0.0, 5.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, std::numbers::pi / 2.0, 4, 4);
    EXPECT_NEAR(cam.forward().z, -1.0, 1e-15);
    const Ray centre = ray_through(cam, 2.0, 2.0);
    EXPECT_NEAR(centre.dir.z, -1.0, 1e-15);
    const Ray top_left = ray_through(cam, 0.0, 0.0);
    // 90 degree vertical fov on a square image: the corner ray has slope 1 on both axes.
    EXPECT_NEAR(top_left.dir.x, -top_left.dir.y, 1e-15);
    EXPECT_NEAR(top_left.dir.y / -top_left.dir.z, 1.0, 1e-12);
    const Ray p00 = generate_ray(cam, 0, 0);
    EXPECT_LT(p00.dir.x, 0.0);
    EXPECT_GT(p00.dir.y, 0.0);
    // Half the diagonal of one pixel on the unit-distance image plane.
    EXPECT_NEAR(pixel_cone_angle(std::numbers::pi / 2.0, 4), std::hypot(1.0 / 4.0, 1.0 / 4.0), 1e-12);
}
