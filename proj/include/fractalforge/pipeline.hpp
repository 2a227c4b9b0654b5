#pragma once

// Document-level helpers shared by the command line tool and the render service,
// so both produce identical bytes for identical inputs.

#include <filesystem>

#include "fractalforge/render.hpp"
#include "fractalforge/scene_io.hpp"

namespace ff {

/// Thread count used when none is requested: FRACTALFORGE_THREADS if set to a
/// positive integer, otherwise the OpenMP default.
int default_thread_count();

/// Loads image skyboxes referenced by the document, resolving relative paths
/// against `base_dir`. Throws IoError.
void load_assets(SceneDocument& doc, const std::filesystem::path& base_dir);

/// Reads, parses and loads assets for a scene file.
SceneDocument load_scene_file(const std::filesystem::path& path);

Camera document_camera(const SceneDocument& doc, int width, int height);

Framebuffer render_document(const SceneDocument& doc, const InstructionBuffer& buffer, int width, int height,
                            const RenderConfig& cfg);
Framebuffer render_document(const SceneDocument& doc, int width, int height, const RenderConfig& cfg);

}  // namespace ff
