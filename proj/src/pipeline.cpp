#include "fractalforge/pipeline.hpp"

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <cstring>

#include "fractalforge/image.hpp"

namespace ff {

int default_thread_count() {
    if (const char* env = std::getenv("FRACTALFORGE_THREADS")) {
        int n = 0;
        const char* end = env + std::strlen(env);
        const auto res = std::from_chars(env, end, n);
        if (res.ec == std::errc{} && res.ptr == end && n > 0) return n;
    }
    return omp_get_max_threads();
}

void load_assets(SceneDocument& doc, const std::filesystem::path& base_dir) {
    Skybox& sky = doc.tree.lighting.skybox;
    if (sky.type != Skybox::Type::Image || sky.image) return;
    std::filesystem::path path(sky.image_path);
    if (path.is_relative()) path = base_dir / path;
    sky.image = std::make_shared<EnvironmentImage>(decode_png(read_file(path)));
}

SceneDocument load_scene_file(const std::filesystem::path& path) {
    SceneDocument doc = parse_scene(read_file(path));
    load_assets(doc, path.parent_path());
    return doc;
}

Camera document_camera(const SceneDocument& doc, int width, int height) {
    return doc.camera.value_or(CameraSpec{}).to_camera(width, height);
}

Framebuffer render_document(const SceneDocument& doc, const InstructionBuffer& buffer, int width, int height,
                            const RenderConfig& cfg) {
    return render(buffer, document_camera(doc, width, height), cfg, doc.tree.lighting, doc.tree.materials);
}

Framebuffer render_document(const SceneDocument& doc, int width, int height, const RenderConfig& cfg) {
    return render_document(doc, compile(doc.tree), width, height, cfg);
}

}  // namespace ff
