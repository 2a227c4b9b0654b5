#pragma once

// Per-pixel kernels shared by the OpenMP and serial render drivers.

#include <map>
#include <stdexcept>

#include "fractalforge/render.hpp"

namespace ff::kernels {

/// Map wrapper counting evaluations into a caller-owned counter.
template <class Map>
struct Counted {
    const Map& map;
    uint64_t& calls;
    Sample operator()(const Vec3& p) const {
        ++calls;
        return map(p);
    }
};

struct LevelPlan {
    Camera camera;
    MarchConfig march;
};

inline std::vector<LevelPlan> plan_levels(const Camera& camera, const MarchConfig& cfg, int levels) {
    check_pyramid_shape(camera.width, camera.height, levels);
    std::vector<LevelPlan> plan;
    for (int l = 0; l < levels; ++l) {
        const int shift = levels - 1 - l;
        LevelPlan p{camera, cfg};
        p.camera.width = camera.width >> shift;
        p.camera.height = camera.height >> shift;
        if (l + 1 < levels) {
            // Coarse levels cone-march: the threshold covers the whole pixel footprint.
            p.march.pixel_cone = pixel_cone_angle(camera.fov_y, p.camera.height);
            p.march.dynamic_epsilon = true;
            p.march.discontinuity_reduction = false;
        }
        plan.push_back(p);
    }
    return plan;
}

inline void init_level(DepthLevel& level, const LevelPlan& plan) {
    level.width = plan.camera.width;
    level.height = plan.camera.height;
    level.cone = pixel_cone_angle(plan.camera.fov_y, plan.camera.height);
    level.hits.assign(static_cast<size_t>(level.width) * level.height, HitInfo{});
    level.seeds.assign(level.hits.size(), plan.march.min_t);
}

/// Conservative start for a fine pixel: the nearest depth in the 3x3 coarse
/// neighbourhood, pulled back by one coarse cone radius.
inline double seed_from_coarse(const DepthLevel& coarse, int fx, int fy, const MarchConfig& cfg) {
    const int cx = fx / 2;
    const int cy = fy / 2;
    double seed = std::numeric_limits<double>::infinity();
    for (int dy = -1; dy <= 1; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= coarse.height) continue;
        for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx;
            if (x < 0 || x >= coarse.width) continue;
            const double depth = std::min(coarse.hits[static_cast<size_t>(y) * coarse.width + x].t, cfg.max_t);
            seed = std::min(seed, depth - depth * coarse.cone);
        }
    }
    return std::max(cfg.min_t, seed);
}

/// Traces one pixel from `seed`. A seed that starts inside geometry is flagged and
/// the pixel is re-traced from min_t.
template <class Map>
HitInfo trace_seeded(const Map& map, const Ray& ray, const MarchConfig& cfg, double seed, bool& flagged) {
    MarchConfig seeded = cfg;
    seeded.min_t = seed;
    double first_d = std::numeric_limits<double>::infinity();
    bool first = true;
    HitInfo hit = sphere_trace(map, ray, seeded, [&](double, double d) {
        if (first) first_d = d;
        first = false;
    });
    flagged = seed > cfg.min_t && first_d < -cfg.epsilon(seed);
    if (flagged) hit = sphere_trace(map, ray, cfg);
    return hit;
}

struct PixelResult {
    HitInfo hit;
    uint64_t calls = 0;
    bool flagged = false;
};

template <class Map>
PixelResult trace_level_pixel(const Map& map, const LevelPlan& plan, const DepthLevel* coarse, DepthLevel& level,
                              int x, int y) {
    PixelResult r;
    const Counted<Map> counted{map, r.calls};
    const Ray ray = generate_ray(plan.camera, x, y);
    const double seed = coarse ? seed_from_coarse(*coarse, x, y, plan.march) : plan.march.min_t;
    r.hit = trace_seeded(counted, ray, plan.march, seed, r.flagged);
    const size_t i = static_cast<size_t>(y) * level.width + x;
    level.seeds[i] = seed;
    level.hits[i] = r.hit;
    return r;
}

class MaterialTable {
public:
    explicit MaterialTable(std::span<const Material> materials) {
        for (const auto& m : materials) by_id_.emplace(m.id, m);
    }
    const Material& operator()(int id) const {
        const auto it = by_id_.find(id);
        return it == by_id_.end() ? fallback_ : it->second;
    }

private:
    std::map<int, Material> by_id_;
    Material fallback_;
};

struct ColorResult {
    Vec3 color;
    uint64_t calls = 0;
};

template <class Map>
ColorResult color_pixel(const Map& map, const Camera& camera, const MarchConfig& cfg, const HitInfo& hit, int x,
                        int y, const LightingConfig& lighting, const MaterialTable& materials) {
    ColorResult r;
    const Ray ray = generate_ray(camera, x, y);
    if (!hit.hit) {
        r.color = clamp01(lighting.skybox.sample(ray.dir));
        return r;
    }
    const Counted<Map> counted{map, r.calls};
    const Vec3 p = ray.at(hit.t);
    NormalEstimate n = estimate_normal(counted, p);
    if (n.degenerate) n.normal = -ray.dir;
    r.color = shade(counted, p, n.normal, ray.dir, materials(hit.material), lighting, cfg, hit.t);
    return r;
}

inline MarchConfig final_march(const Camera& camera, const RenderConfig& cfg) {
    MarchConfig m = cfg.march;
    if (cfg.derive_pixel_cone) m.pixel_cone = pixel_cone_angle(camera.fov_y, camera.height);
    return m;
}

}  // namespace ff::kernels
