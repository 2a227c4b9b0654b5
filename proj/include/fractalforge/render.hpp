#pragma once

// Frame rendering: a coarse-to-fine depth prepass followed by a coloring pass.
//
// The OpenMP drivers in ff:: parallelise over image rows. ff::reference holds
// the plain serial drivers built from the same per-pixel kernels; tests hold
// the parallel output bitwise-equal to them for every thread count.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fractalforge/compiler.hpp"
#include "fractalforge/raymarch.hpp"

namespace ff {

using MapFunction = std::function<Sample(const Vec3&)>;

struct RenderConfig {
    MarchConfig march;
    /// Depth pyramid levels; 1 traces every pixel directly from min_t.
    int levels = 3;
    /// Worker threads; 0 uses the OpenMP default.
    int threads = 0;
    /// Replace march.pixel_cone with the camera's per-pixel cone at the final resolution.
    bool derive_pixel_cone = true;
    /// Polled between rows; returning true abandons the frame.
    std::function<bool()> cancelled;
};

struct DepthLevel {
    int width = 0;
    int height = 0;
    double cone = 0.0;
    std::vector<HitInfo> hits;
    std::vector<double> seeds;  // starting t per pixel
};

struct DepthPyramid {
    std::vector<DepthLevel> levels;  // coarsest first
    uint64_t map_calls = 0;
    /// Pixels whose seed landed inside geometry and were re-traced from min_t.
    uint64_t flagged = 0;
    bool complete = true;

    const DepthLevel& finest() const { return levels.back(); }
};

struct RenderStats {
    uint64_t depth_map_calls = 0;
    uint64_t shading_map_calls = 0;
    uint64_t flagged_pixels = 0;
    uint64_t hit_pixels = 0;
};

struct Framebuffer {
    int width = 0;
    int height = 0;
    std::vector<Vec3> color;   // linear RGB in [0,1]
    std::vector<double> depth;  // hit t, or +inf for misses
    RenderStats stats;
    bool complete = true;

    const Vec3& at(int x, int y) const { return color[static_cast<size_t>(y) * width + x]; }
};

/// Throws std::invalid_argument unless levels >= 1 and both image dimensions are
/// divisible by 2^(levels-1).
void check_pyramid_shape(int width, int height, int levels);

DepthPyramid depth_prepass(const MapFunction& map, const Camera& camera, const MarchConfig& cfg, int levels,
                           int threads = 0);

Framebuffer render(const MapFunction& map, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials);
Framebuffer render(const InstructionBuffer& buffer, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials);
/// Compiles the tree and renders the buffer with the tree's lighting and materials.
Framebuffer render(const SceneTree& tree, const Camera& camera, const RenderConfig& cfg);

namespace reference {
DepthPyramid depth_prepass(const MapFunction& map, const Camera& camera, const MarchConfig& cfg, int levels);
Framebuffer render(const MapFunction& map, const Camera& camera, const RenderConfig& cfg,
                   const LightingConfig& lighting, std::span<const Material> materials);
Framebuffer render(const SceneTree& tree, const Camera& camera, const RenderConfig& cfg);
}  // namespace reference

}  // namespace ff
