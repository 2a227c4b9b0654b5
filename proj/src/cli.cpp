#include "fractalforge/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "fractalforge/image.hpp"
#include "fractalforge/pipeline.hpp"
#include "fractalforge/service.hpp"

namespace ff {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct CameraFlags {
    std::vector<double> eye;
    std::vector<double> target;
    std::vector<double> up;
    double fov_deg = 0.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--eye", eye, "Camera position X Y Z")->expected(3);
        cmd->add_option("--target", target, "Camera target X Y Z")->expected(3);
        cmd->add_option("--up", up, "Camera up vector X Y Z")->expected(3);
        cmd->add_option("--fov", fov_deg, "Vertical field of view in degrees")->check(CLI::Range(1.0, 179.0));
    }
    void apply(SceneDocument& doc) const {
        if (eye.empty() && target.empty() && up.empty() && fov_deg == 0.0) return;
        CameraSpec c = doc.camera.value_or(CameraSpec{});
        if (!eye.empty()) c.position = {eye[0], eye[1], eye[2]};
        if (!target.empty()) c.target = {target[0], target[1], target[2]};
        if (!up.empty()) c.up = {up[0], up[1], up[2]};
        if (fov_deg != 0.0) c.fov_deg = fov_deg;
        doc.camera = c;
    }
};

struct RenderFlags {
    int width = 512;
    int height = 512;
    int levels = 3;
    int threads = 0;

    void add(CLI::App* cmd, bool with_levels = true) {
        cmd->add_option("--width", width, "Image width")->check(CLI::Range(1, 16384));
        cmd->add_option("--height", height, "Image height")->check(CLI::Range(1, 16384));
        if (with_levels) cmd->add_option("--levels", levels, "Depth pyramid levels")->check(CLI::Range(1, 8));
        cmd->add_option("--threads", threads, "Worker threads (default: FRACTALFORGE_THREADS or all cores)")
            ->check(CLI::Range(1, 1024));
    }
    RenderConfig config() const {
        RenderConfig cfg;
        cfg.levels = levels;
        cfg.threads = threads > 0 ? threads : default_thread_count();
        return cfg;
    }
};

std::string frame_name(int index) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.png", index);
    return name;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Signed distance field renderer and scene compiler", "fractalforge"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "fractalforge 0.1.0");

    std::string scene_path;
    std::string out_path;
    std::string raw_path;
    CameraFlags camera;
    RenderFlags render_flags;

    auto* render_cmd = app.add_subcommand("render", "Render a scene to PNG");
    render_cmd->add_option("scene", scene_path, "Scene file")->required();
    render_cmd->add_option("--out,-o", out_path, "Output PNG")->required();
    render_cmd->add_option("--raw", raw_path, "Also write a linear float dump");
    render_flags.add(render_cmd);
    camera.add(render_cmd);

    double fps = 24.0;
    double duration = 1.0;
    auto* animate_cmd = app.add_subcommand("animate", "Render numbered PNG frames of the scene's animation tracks");
    animate_cmd->add_option("scene", scene_path, "Scene file")->required();
    animate_cmd->add_option("--out,-o", out_path, "Output directory")->required();
    animate_cmd->add_option("--fps", fps, "Frames per second")->check(CLI::PositiveNumber);
    animate_cmd->add_option("--duration", duration, "Length in seconds")->check(CLI::NonNegativeNumber);
    render_flags.add(animate_cmd);
    camera.add(animate_cmd);

    std::string emit = "shader";
    auto* compile_cmd = app.add_subcommand("compile", "Emit shader source or the instruction buffer");
    compile_cmd->add_option("scene", scene_path, "Scene file")->required();
    compile_cmd->add_option("--emit", emit, "shader or buffer")->check(CLI::IsMember({"shader", "buffer"}));
    compile_cmd->add_option("--out,-o", out_path, "Output file (default: stdout)");

    auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scene");
    validate_cmd->add_option("scene", scene_path, "Scene file")->required();

    auto* bench_cmd = app.add_subcommand("bench", "Compare direct tracing against the depth pyramid (CSV)");
    bench_cmd->add_option("scene", scene_path, "Scene file")->required();
    render_flags.add(bench_cmd);
    camera.add(bench_cmd);

    int port = 8787;
    auto* serve_cmd = app.add_subcommand("serve", "Run the live-editing HTTP/WebSocket service");
    serve_cmd->add_option("scene", scene_path, "Initial scene file")->required();
    serve_cmd->add_option("--port", port, "TCP port on 127.0.0.1")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--levels", render_flags.levels, "Depth pyramid levels")->check(CLI::Range(1, 8));
    serve_cmd->add_option("--threads", render_flags.threads, "Worker threads")->check(CLI::Range(1, 1024));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        SceneDocument doc = load_scene_file(scene_path);
        camera.apply(doc);

        if (*validate_cmd) {
            out << scene_path << ": ok (" << node_count(doc.tree) << " nodes)\n";
            return kExitOk;
        }
        if (*compile_cmd) {
            const std::string text = emit == "shader" ? emit_shader_source(doc.tree) : dump_buffer(compile(doc.tree));
            if (out_path.empty()) {
                out << text;
            } else {
                write_file(out_path, text);
            }
            return kExitOk;
        }
        if (*render_cmd) {
            const Framebuffer fb = render_document(doc, render_flags.width, render_flags.height, render_flags.config());
            write_file(out_path, encode_png(fb));
            if (!raw_path.empty()) write_file(raw_path, encode_raw(fb));
            return kExitOk;
        }
        if (*animate_cmd) {
            std::filesystem::create_directories(out_path);
            const int frames = static_cast<int>(std::lround(fps * duration));
            const InstructionBuffer base = compile(doc.tree);
            for (int i = 0; i < frames; ++i) {
                const SceneDocument at = document_at(doc, i / fps);
                const Framebuffer fb = doc.animation.empty()
                                           ? render_document(at, base, render_flags.width, render_flags.height,
                                                             render_flags.config())
                                           : render_document(at, render_flags.width, render_flags.height,
                                                             render_flags.config());
                write_file(std::filesystem::path(out_path) / frame_name(i), encode_png(fb));
            }
            out << frames << " frames written to " << out_path << "\n";
            return kExitOk;
        }
        if (*bench_cmd) {
            const InstructionBuffer buffer = compile(doc.tree);
            out << "mode,width,height,levels,threads,depth_map_calls,shading_map_calls,total_map_calls,wall_ms\n";
            for (const int levels : {1, render_flags.levels}) {
                RenderConfig cfg = render_flags.config();
                cfg.levels = levels;
                const auto start = std::chrono::steady_clock::now();
                const Framebuffer fb = render_document(doc, buffer, render_flags.width, render_flags.height, cfg);
                const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                out << (levels == 1 ? "direct" : "pyramid") << ',' << fb.width << ',' << fb.height << ',' << levels
                    << ',' << cfg.threads << ',' << fb.stats.depth_map_calls << ',' << fb.stats.shading_map_calls
                    << ',' << fb.stats.depth_map_calls + fb.stats.shading_map_calls << ',' << std::fixed
                    << std::setprecision(3) << ms << '\n';
            }
            return kExitOk;
        }
        if (*serve_cmd) {
            ServiceOptions options;
            options.levels = render_flags.levels;
            options.threads = render_flags.threads;
            options.asset_dir = std::filesystem::path(scene_path).parent_path();
            RenderService service(std::move(doc), options);
            g_interrupted = false;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            run_server(service, static_cast<unsigned short>(port), g_interrupted, [&](unsigned short bound) {
                out << "listening on http://127.0.0.1:" << bound << std::endl;
            });
            return kExitOk;
        }
    } catch (const ParseError& e) {
        err << scene_path << ":" << e.what() << "\n";
        return kExitInvalidScene;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CompileError& e) {
        err << scene_path << ": " << e.what() << "\n";
        return kExitInvalidScene;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidScene;
    } catch (const std::runtime_error& e) {
        // Remaining runtime failures come from the environment (sockets, files).
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace ff
