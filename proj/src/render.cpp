#include "fractalforge/render.hpp"

#include <omp.h>

#include <atomic>

#include "render_kernels.hpp"

namespace ff {

void check_pyramid_shape(int width, int height, int levels) {
    if (levels < 1) throw std::invalid_argument("depth pyramid needs at least one level");
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be positive");
    const int step = 1 << (levels - 1);
    if (width % step != 0 || height % step != 0) {
        throw std::invalid_argument("image size " + std::to_string(width) + "x" + std::to_string(height) +
                                    " is not divisible by " + std::to_string(step) + " for " +
                                    std::to_string(levels) + " pyramid levels");
    }
}

namespace {

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

template <class Map>
DepthPyramid prepass(const Map& map, const Camera& camera, const MarchConfig& cfg, int levels, int threads,
                     const std::function<bool()>& cancelled) {
    const auto plan = kernels::plan_levels(camera, cfg, levels);
    DepthPyramid pyramid;
    pyramid.levels.resize(plan.size());
    std::atomic<bool> abandon{false};
    const int nt = thread_count(threads);

    for (size_t l = 0; l < plan.size(); ++l) {
        DepthLevel& level = pyramid.levels[l];
        kernels::init_level(level, plan[l]);
        const DepthLevel* coarse = l > 0 ? &pyramid.levels[l - 1] : nullptr;
        uint64_t calls = 0;
        uint64_t flagged = 0;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt) reduction(+ : calls, flagged)
        for (int y = 0; y < level.height; ++y) {
            if (abandon.load(std::memory_order_relaxed)) continue;
            if (cancelled && cancelled()) {
                abandon.store(true, std::memory_order_relaxed);
                continue;
            }
            for (int x = 0; x < level.width; ++x) {
                const auto r = kernels::trace_level_pixel(map, plan[l], coarse, level, x, y);
                calls += r.calls;
                flagged += r.flagged ? 1 : 0;
            }
        }
        pyramid.map_calls += calls;
        pyramid.flagged += flagged;
        if (abandon.load()) {
            pyramid.complete = false;
            break;
        }
    }
    return pyramid;
}

template <class Map>
Framebuffer render_frame(const Map& map, const Camera& camera, const RenderConfig& cfg,
                         const LightingConfig& lighting, std::span<const Material> materials) {
    const MarchConfig march = kernels::final_march(camera, cfg);
    Framebuffer fb;
    fb.width = camera.width;
    fb.height = camera.height;
    fb.color.assign(static_cast<size_t>(fb.width) * fb.height, Vec3{});
    fb.depth.assign(fb.color.size(), std::numeric_limits<double>::infinity());

    const DepthPyramid pyramid = prepass(map, camera, march, cfg.levels, cfg.threads, cfg.cancelled);
    fb.stats.depth_map_calls = pyramid.map_calls;
    fb.stats.flagged_pixels = pyramid.flagged;
    if (!pyramid.complete) {
        fb.complete = false;
        return fb;
    }

    const DepthLevel& depth = pyramid.finest();
    const kernels::MaterialTable table(materials);
    std::atomic<bool> abandon{false};
    uint64_t calls = 0;
    uint64_t hits = 0;
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(cfg.threads)) reduction(+ : calls, hits)
    for (int y = 0; y < fb.height; ++y) {
        if (abandon.load(std::memory_order_relaxed)) continue;
        if (cfg.cancelled && cfg.cancelled()) {
            abandon.store(true, std::memory_order_relaxed);
            continue;
        }
        for (int x = 0; x < fb.width; ++x) {
            const size_t i = static_cast<size_t>(y) * fb.width + x;
            const HitInfo& hit = depth.hits[i];
            const auto c = kernels::color_pixel(map, camera, march, hit, x, y, lighting, table);
            fb.color[i] = c.color;
            if (hit.hit) fb.depth[i] = hit.t;
            calls += c.calls;
            hits += hit.hit ? 1 : 0;
        }
    }
    fb.stats.shading_map_calls = calls;
    fb.stats.hit_pixels = hits;
    fb.complete = !abandon.load();
    return fb;
}

}  // namespace

DepthPyramid depth_prepass(const MapFunction& map, const Camera& camera, const MarchConfig& cfg, int levels,
                           int threads) {
    return prepass(map, camera, cfg, levels, threads, {});
}

Framebuffer render(const MapFunction& map, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials) {
    return render_frame(map, camera, cfg, lighting, materials);
}

Framebuffer render(const InstructionBuffer& buffer, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials) {
    const auto map = [&buffer](const Vec3& p) { return interpret(buffer, p); };
    return render_frame(map, camera, cfg, lighting, materials);
}

Framebuffer render(const SceneTree& tree, const Camera& camera, const RenderConfig& cfg) {
    const InstructionBuffer buffer = compile(tree);
    return render(buffer, camera, cfg, tree.lighting, tree.materials);
}

}  // namespace ff
