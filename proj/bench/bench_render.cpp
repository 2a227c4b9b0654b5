// Serial reference vs OpenMP renderer, direct vs pyramid, interpreter vs tree walk.
//   ./build/bench/fractalforge_bench --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>
#include <string>

#include "fractalforge/compiler.hpp"
#include "fractalforge/pipeline.hpp"
#include "fractalforge/render.hpp"
#include "fractalforge/scene_io.hpp"

using namespace ff;

namespace {

const SceneDocument& scene(const char* name) {
    static std::map<std::string, SceneDocument> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        const auto path = std::filesystem::path(FF_SOURCE_DIR) / "scenes" / (std::string(name) + ".sdfscene.json");
        it = cache.emplace(name, load_scene_file(path)).first;
    }
    return it->second;
}

void report(benchmark::State& state, const Framebuffer& fb) {
    state.counters["depth_calls"] = static_cast<double>(fb.stats.depth_map_calls);
    state.counters["total_calls"] = static_cast<double>(fb.stats.depth_map_calls + fb.stats.shading_map_calls);
}

// range(0): image side, range(1): pyramid levels
void BM_ReferenceRender(benchmark::State& state, const char* name) {
    const SceneDocument& doc = scene(name);
    const InstructionBuffer buffer = compile(doc.tree);
    const MapFunction map = [&](const Vec3& p) { return interpret(buffer, p); };
    const int side = static_cast<int>(state.range(0));
    const Camera cam = document_camera(doc, side, side);
    RenderConfig cfg;
    cfg.levels = static_cast<int>(state.range(1));
    Framebuffer fb;
    for (auto _ : state) {
        fb = reference::render(map, cam, cfg, doc.tree.lighting, doc.tree.materials);
        benchmark::DoNotOptimize(fb.color.data());
    }
    report(state, fb);
}

// range(2): thread count, 0 for the OpenMP default
void BM_ParallelRender(benchmark::State& state, const char* name) {
    const SceneDocument& doc = scene(name);
    const InstructionBuffer buffer = compile(doc.tree);
    const int side = static_cast<int>(state.range(0));
    const Camera cam = document_camera(doc, side, side);
    RenderConfig cfg;
    cfg.levels = static_cast<int>(state.range(1));
    cfg.threads = static_cast<int>(state.range(2));
    Framebuffer fb;
    for (auto _ : state) {
        fb = render(buffer, cam, cfg, doc.tree.lighting, doc.tree.materials);
        benchmark::DoNotOptimize(fb.color.data());
    }
    report(state, fb);
}

void BM_Interpret(benchmark::State& state, const char* name) {
    const InstructionBuffer buffer = compile(scene(name).tree);
    Vec3 p{0.3, -0.2, 0.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(interpret(buffer, p));
        p.x = p.x > 1.0 ? -1.0 : p.x + 1e-3;
    }
}

void BM_EvalTree(benchmark::State& state, const char* name) {
    const SceneTree& tree = scene(name).tree;
    Vec3 p{0.3, -0.2, 0.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval_tree(tree, p));
        p.x = p.x > 1.0 ? -1.0 : p.x + 1e-3;
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ReferenceRender, fig5, "fig5_ifs")
    ->Args({256, 1})
    ->Args({256, 3})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ParallelRender, fig5, "fig5_ifs")
    ->Args({256, 1, 0})
    ->Args({256, 3, 0})
    ->Args({256, 3, 1})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_CAPTURE(BM_ReferenceRender, fig1, "fig1")->Args({256, 3})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ParallelRender, fig1, "fig1")->Args({256, 3, 0})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_CAPTURE(BM_Interpret, fig1, "fig1");
BENCHMARK_CAPTURE(BM_EvalTree, fig1, "fig1");
BENCHMARK_CAPTURE(BM_Interpret, fig5, "fig5_ifs");
BENCHMARK_CAPTURE(BM_EvalTree, fig5, "fig5_ifs");

BENCHMARK_MAIN();
