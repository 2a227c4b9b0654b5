#include "fractalforge/render.hpp"
#include "render_kernels.hpp"

namespace ff::reference {

DepthPyramid depth_prepass(const MapFunction& map, const Camera& camera, const MarchConfig& cfg, int levels) {
    const auto plan = kernels::plan_levels(camera, cfg, levels);
    DepthPyramid pyramid;
    pyramid.levels.resize(plan.size());
    for (size_t l = 0; l < plan.size(); ++l) {
        DepthLevel& level = pyramid.levels[l];
        kernels::init_level(level, plan[l]);
        const DepthLevel* coarse = l > 0 ? &pyramid.levels[l - 1] : nullptr;
        for (int y = 0; y < level.height; ++y) {
            for (int x = 0; x < level.width; ++x) {
                const auto r = kernels::trace_level_pixel(map, plan[l], coarse, level, x, y);
                pyramid.map_calls += r.calls;
                pyramid.flagged += r.flagged ? 1 : 0;
            }
        }
    }
    return pyramid;
}

Framebuffer render(const MapFunction& map, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials) {
    const MarchConfig march = kernels::final_march(camera, cfg);
    const DepthPyramid pyramid = reference::depth_prepass(map, camera, march, cfg.levels);
    const DepthLevel& depth = pyramid.finest();
    const kernels::MaterialTable table(materials);

    Framebuffer fb;
    fb.width = camera.width;
    fb.height = camera.height;
    fb.color.resize(static_cast<size_t>(fb.width) * fb.height);
    fb.depth.assign(fb.color.size(), std::numeric_limits<double>::infinity());
    fb.stats.depth_map_calls = pyramid.map_calls;
    fb.stats.flagged_pixels = pyramid.flagged;
    for (int y = 0; y < fb.height; ++y) {
        for (int x = 0; x < fb.width; ++x) {
            const size_t i = static_cast<size_t>(y) * fb.width + x;
            const HitInfo& hit = depth.hits[i];
            const auto c = kernels::color_pixel(map, camera, march, hit, x, y, lighting, table);
            fb.color[i] = c.color;
            if (hit.hit) {
                fb.depth[i] = hit.t;
                ++fb.stats.hit_pixels;
            }
            fb.stats.shading_map_calls += c.calls;
        }
    }
    return fb;
}

Framebuffer render(const SceneTree& tree, const Camera& camera, const RenderConfig& cfg) {
    const InstructionBuffer buffer = compile(tree);
    const MapFunction map = [&buffer](const Vec3& p) { return interpret(buffer, p); };
    return reference::render(map, camera, cfg, tree.lighting,
                  tree.materials);
}

}  // namespace ff::reference
