#pragma once

// Live-editing session behind the HTTP/WebSocket server. RenderService is
// transport-agnostic: the server maps requests onto handle() and pumps
// stream_previews() into a WebSocket.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fractalforge/compiler.hpp"
#include "fractalforge/render.hpp"
#include "fractalforge/scene_io.hpp"

namespace ff {

struct ServiceOptions {
    std::vector<int> preview_ladder{64, 256, 512};
    int levels = 3;
    int threads = 0;  // 0: default_thread_count()
    std::filesystem::path asset_dir = ".";
};

struct HttpRequest {
    std::string method;
    std::string target;  // path plus optional query string
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Immutable state a frame is rendered from.
struct Snapshot {
    uint64_t revision = 0;
    SceneDocument document;
    InstructionBuffer buffer;
};

struct PreviewFrame {
    uint32_t revision = 0;
    int width = 0;
    int height = 0;
    std::string png;
};

inline constexpr size_t kPreviewHeaderSize = 16;
inline constexpr uint8_t kPreviewFormatPng = 1;

/// 16-byte header (u32 revision, u16 width, u16 height, u8 format, 7 reserved
/// zero bytes; little-endian) followed by the PNG payload.
std::string encode_preview_message(const PreviewFrame& frame);
PreviewFrame decode_preview_message(std::string_view message);

class RenderService {
public:
    explicit RenderService(SceneDocument doc, ServiceOptions options = {});

    HttpResponse handle(const HttpRequest& request);

    std::shared_ptr<const Snapshot> snapshot() const;
    uint64_t revision() const { return revision_.load(); }
    uint64_t compile_count() const { return compile_count_.load(); }

    /// Sends the ladder of preview frames for every new revision until `stop`
    /// returns true or `send` returns false. A newer revision abandons the
    /// frame in progress.
    using FrameSink = std::function<bool(const PreviewFrame&)>;
    void stream_previews(const FrameSink& send, const std::function<bool()>& stop) const;

    /// Wakes preview streams so they can observe `stop`.
    void notify_all() const { changed_.notify_all(); }

    RenderConfig render_config() const;

private:
    HttpResponse get_render(const std::string& query) const;
    HttpResponse get_compile(const std::string& query) const;
    HttpResponse get_stats() const;
    HttpResponse put_scene(const std::string& body);
    HttpResponse post_edit(const std::string& body);

    InstructionBuffer counted_compile(const SceneTree& tree);
    void publish(SceneDocument doc, InstructionBuffer buffer);

    ServiceOptions options_;
    std::mutex edit_mutex_;  // single writer
    mutable std::mutex snapshot_mutex_;
    mutable std::condition_variable changed_;
    std::shared_ptr<const Snapshot> current_;
    std::atomic<uint64_t> revision_{0};
    std::atomic<uint64_t> compile_count_{0};
};

/// Blocking HTTP + WebSocket server on 127.0.0.1:`port`. Returns when `stop` is set.
/// `on_listening` receives the bound port (useful with port 0).
void run_server(RenderService& service, unsigned short port, const std::atomic<bool>& stop,
                const std::function<void(unsigned short)>& on_listening = {});

}  // namespace ff
