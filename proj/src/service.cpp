#include "fractalforge/service.hpp"

#include <charconv>
#include <chrono>
#include <map>

#include <json.hpp>

#include "fractalforge/image.hpp"
#include "fractalforge/pipeline.hpp"

namespace ff {

using nlohmann::json;

namespace {

constexpr int kMaxRenderSize = 4096;

struct HttpError : std::runtime_error {
    HttpError(int status, const std::string& what, std::vector<std::string> violations = {})
        : std::runtime_error(what), status(status), violations(std::move(violations)) {}
    int status;
    std::vector<std::string> violations;
};

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

HttpResponse error_response(int status, const std::string& message, const std::vector<std::string>& violations = {}) {
    json body{{"error", message}};
    if (!violations.empty()) body["violations"] = violations;
    return json_response(status, body);
}

std::map<std::string, std::string> parse_query(const std::string& query) {
    std::map<std::string, std::string> out;
    size_t start = 0;
    while (start < query.size()) {
        size_t amp = query.find('&', start);
        if (amp == std::string::npos) amp = query.size();
        const std::string part = query.substr(start, amp - start);
        const size_t eq = part.find('=');
        if (eq == std::string::npos) {
            out[part] = "";
        } else {
            out[part.substr(0, eq)] = part.substr(eq + 1);
        }
        start = amp + 1;
    }
    return out;
}

int query_int(const std::map<std::string, std::string>& q, const std::string& key, int fallback) {
    const auto it = q.find(key);
    if (it == q.end()) return fallback;
    int v = 0;
    const auto& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw HttpError(400, "bad integer for '" + key + "'");
    return v;
}

std::vector<std::string> describe(const std::vector<Violation>& violations) {
    std::vector<std::string> out;
    for (const auto& v : violations) out.push_back(to_string(v));
    return out;
}

void require_valid(const SceneTree& tree) {
    if (auto v = validate(tree); !v.empty()) throw HttpError(422, "edit violates scene rules", describe(v));
}

int field_int(const json& cmd, const char* key) {
    const auto it = cmd.find(key);
    if (it == cmd.end() || !it->is_number_integer()) throw HttpError(400, std::string("missing integer field '") + key + "'");
    return it->get<int>();
}

const json& field(const json& cmd, const char* key) {
    const auto it = cmd.find(key);
    if (it == cmd.end()) throw HttpError(400, std::string("missing field '") + key + "'");
    return *it;
}

// Fragment parse errors are semantic failures of the command body.
template <class Fn>
auto fragment(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw HttpError(e.kind() == ParseError::Kind::SyntaxError ? 400 : 422, e.what(), {e.what()});
    }
}

}  // namespace

std::string encode_preview_message(const PreviewFrame& frame) {
    std::string out(kPreviewHeaderSize, '\0');
    const auto put = [&out](size_t at, uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
    };
    put(0, frame.revision, 4);
    put(4, static_cast<uint16_t>(frame.width), 2);
    put(6, static_cast<uint16_t>(frame.height), 2);
    put(8, kPreviewFormatPng, 1);
    out += frame.png;
    return out;
}

PreviewFrame decode_preview_message(std::string_view message) {
    if (message.size() < kPreviewHeaderSize) throw std::invalid_argument("preview message shorter than its header");
    const auto get = [message](size_t at, int bytes) {
        uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(message[at + i])) << (8 * i);
        return v;
    };
    if (get(8, 1) != kPreviewFormatPng) throw std::invalid_argument("unknown preview format");
    PreviewFrame f;
    f.revision = static_cast<uint32_t>(get(0, 4));
    f.width = static_cast<int>(get(4, 2));
    f.height = static_cast<int>(get(6, 2));
    f.png = std::string(message.substr(kPreviewHeaderSize));
    return f;
}

RenderService::RenderService(SceneDocument doc, ServiceOptions options) : options_(std::move(options)) {
    load_assets(doc, options_.asset_dir);
    InstructionBuffer buffer = counted_compile(doc.tree);
    publish(std::move(doc), std::move(buffer));
}

std::shared_ptr<const Snapshot> RenderService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
}

RenderConfig RenderService::render_config() const {
    RenderConfig cfg;
    cfg.levels = options_.levels;
    cfg.threads = options_.threads > 0 ? options_.threads : default_thread_count();
    return cfg;
}

InstructionBuffer RenderService::counted_compile(const SceneTree& tree) {
    ++compile_count_;
    try {
        return compile(tree);
    } catch (const CompileError& e) {
        throw HttpError(422, e.what(), {e.what()});
    }
}

void RenderService::publish(SceneDocument doc, InstructionBuffer buffer) {
    auto next = std::make_shared<Snapshot>();
    next->document = std::move(doc);
    next->buffer = std::move(buffer);
    {
        std::lock_guard lock(snapshot_mutex_);
        next->revision = revision_.load() + 1;
        current_ = std::move(next);
        revision_.store(current_->revision);
    }
    changed_.notify_all();
}

HttpResponse RenderService::handle(const HttpRequest& request) {
    const size_t qmark = request.target.find('?');
    const std::string path = request.target.substr(0, qmark);
    const std::string query = qmark == std::string::npos ? "" : request.target.substr(qmark + 1);
    try {
        if (path == "/scene") {
            if (request.method == "GET") return {200, "application/json", serialize_scene(snapshot()->document)};
            if (request.method == "PUT") return put_scene(request.body);
        } else if (path == "/render") {
            if (request.method == "GET") return get_render(query);
        } else if (path == "/edit") {
            if (request.method == "POST") return post_edit(request.body);
        } else if (path == "/compile") {
            if (request.method == "GET") return get_compile(query);
        } else if (path == "/stats") {
            if (request.method == "GET") return get_stats();
        } else {
            return error_response(404, "no such endpoint " + path);
        }
        return error_response(405, request.method + " not allowed on " + path);
    } catch (const HttpError& e) {
        return error_response(e.status, e.what(), e.violations);
    } catch (const IoError& e) {
        return error_response(422, e.what());
    }
}

HttpResponse RenderService::get_render(const std::string& query) const {
    const auto q = parse_query(query);
    const int w = query_int(q, "w", 512);
    const int h = query_int(q, "h", w);
    if (w < 1 || h < 1 || w > kMaxRenderSize || h > kMaxRenderSize) throw HttpError(400, "image size out of range");
    const auto snap = snapshot();
    const RenderConfig cfg = render_config();
    try {
        check_pyramid_shape(w, h, cfg.levels);
    } catch (const std::invalid_argument& e) {
        throw HttpError(400, e.what());
    }
    const Framebuffer fb = render_document(snap->document, snap->buffer, w, h, cfg);
    return {200, "image/png", encode_png(fb)};
}

HttpResponse RenderService::get_compile(const std::string& query) const {
    const auto q = parse_query(query);
    const auto it = q.find("emit");
    const std::string emit = it == q.end() ? "shader" : it->second;
    const auto snap = snapshot();
    if (emit == "shader") return {200, "text/plain", emit_shader_source(snap->document.tree)};
    if (emit == "buffer") return {200, "application/octet-stream", dump_buffer(snap->buffer)};
    throw HttpError(400, "emit must be 'shader' or 'buffer'");
}

HttpResponse RenderService::get_stats() const {
    const auto snap = snapshot();
    return json_response(200, {{"revision", snap->revision},
                               {"compile_count", compile_count()},
                               {"nodes", node_count(snap->document.tree)},
                               {"instructions", snap->buffer.instructions.size()}});
}

HttpResponse RenderService::put_scene(const std::string& body) {
    std::lock_guard writer(edit_mutex_);
    SceneDocument doc;
    try {
        doc = parse_scene(body);
    } catch (const ParseError& e) {
        throw HttpError(e.kind() == ParseError::Kind::SyntaxError ? 400 : 422, e.what(), {e.what()});
    }
    load_assets(doc, options_.asset_dir);
    InstructionBuffer buffer = counted_compile(doc.tree);
    publish(std::move(doc), std::move(buffer));
    return json_response(200, {{"revision", revision()}});
}

HttpResponse RenderService::post_edit(const std::string& body) {
    json cmd;
    try {
        cmd = json::parse(body);
    } catch (const json::parse_error& e) {
        throw HttpError(400, e.what());
    }
    if (!cmd.is_object() || !cmd.contains("type") || !cmd["type"].is_string()) {
        throw HttpError(400, "edit command needs a string 'type'");
    }
    const std::string type = cmd["type"].get<std::string>();

    std::lock_guard writer(edit_mutex_);
    const auto snap = snapshot();
    SceneDocument doc = snap->document;
    InstructionBuffer buffer = snap->buffer;

    try {
        if (type == "set_params") {
            const int id = field_int(cmd, "node");
            const SceneNode& node = find_node(doc.tree, id);
            PrimitiveKind kind = node.primitive.kind;
            if (const auto s = cmd.find("shape"); s != cmd.end()) {
                const auto k = s->is_string() ? primitive_kind_from_string(s->get<std::string>()) : std::nullopt;
                if (!k) throw HttpError(422, "unknown shape", {"unknown shape " + s->dump()});
                kind = *k;
            }
            const json& values = field(cmd, "params");
            if (!values.is_array()) throw HttpError(400, "'params' must be an array");
            std::vector<double> v;
            for (const auto& x : values) {
                if (!x.is_number()) throw HttpError(400, "'params' must hold numbers");
                v.push_back(x.get<double>());
            }
            const auto params = PrimitiveParams::from_values(kind, v);
            if (!params) {
                throw HttpError(422, "parameter count mismatch",
                                {std::string(to_string(kind)) + " takes " + std::to_string(arity(kind)) + " parameters"});
            }
            const bool same_kind = kind == node.primitive.kind;
            doc.tree = mutate_params(std::move(doc.tree), id, *params);
            require_valid(doc.tree);
            if (same_kind) {
                update_params(buffer, id, *params);
            } else {
                buffer = counted_compile(doc.tree);
            }
        } else if (type == "set_transform") {
            const int id = field_int(cmd, "node");
            find_node(doc.tree, id);
            const Transform t = fragment([&] { return parse_transform(field(cmd, "transform").dump()); });
            doc.tree = mutate_transform(std::move(doc.tree), id, t);
            require_valid(doc.tree);
            update_transform(buffer, id, t);
        } else if (type == "add_node") {
            const int parent = field_int(cmd, "parent");
            find_node(doc.tree, parent);
            const json& idx = field(cmd, "index");
            if (!idx.is_number_unsigned()) throw HttpError(400, "'index' must be a non-negative integer");
            SceneNode node = fragment([&] { return parse_node(field(cmd, "node").dump()); });
            try {
                doc.tree = add_node(std::move(doc.tree), parent, idx.get<size_t>(), std::move(node));
            } catch (const std::invalid_argument& e) {
                throw HttpError(422, e.what(), {e.what()});
            }
            require_valid(doc.tree);
            buffer = counted_compile(doc.tree);
        } else if (type == "remove_node") {
            const int id = field_int(cmd, "node");
            find_node(doc.tree, id);
            try {
                doc.tree = remove_node(std::move(doc.tree), id);
            } catch (const std::invalid_argument& e) {
                throw HttpError(422, e.what(), {e.what()});
            }
            buffer = counted_compile(doc.tree);
        } else if (type == "reorder_children") {
            const int parent = field_int(cmd, "parent");
            find_node(doc.tree, parent);
            const json& perm = field(cmd, "permutation");
            std::vector<size_t> p;
            if (!perm.is_array()) throw HttpError(400, "'permutation' must be an array");
            for (const auto& x : perm) {
                if (!x.is_number_unsigned()) throw HttpError(400, "'permutation' must hold non-negative integers");
                p.push_back(x.get<size_t>());
            }
            try {
                doc.tree = reorder_children(std::move(doc.tree), parent, p);
            } catch (const std::invalid_argument& e) {
                throw HttpError(422, e.what(), {e.what()});
            }
            buffer = counted_compile(doc.tree);
        } else if (type == "set_ifs") {
            doc.tree.ifs = fragment([&] { return parse_ifs(field(cmd, "ifs").dump()); });
            require_valid(doc.tree);
            buffer.ifs = doc.tree.ifs;
        } else if (type == "set_lighting") {
            doc.tree.lighting = fragment([&] { return parse_lighting(field(cmd, "lighting").dump()); });
            require_valid(doc.tree);
            try {
                load_assets(doc, options_.asset_dir);
            } catch (const IoError& e) {
                throw HttpError(422, e.what(), {e.what()});
            }
        } else if (type == "set_camera") {
            doc.camera = fragment([&] { return parse_camera(field(cmd, "camera").dump()); });
        } else {
            throw HttpError(400, "unknown edit type '" + type + "'");
        }
    } catch (const UnknownNodeId& e) {
        throw HttpError(404, e.what());
    }

    publish(std::move(doc), std::move(buffer));
    return json_response(200, {{"revision", revision()}});
}

void RenderService::stream_previews(const FrameSink& send, const std::function<bool()>& stop) const {
    uint64_t delivered = 0;  // revision whose full ladder has been sent
    while (!stop()) {
        const auto snap = snapshot();
        if (snap->revision == delivered) {
            std::unique_lock lock(snapshot_mutex_);
            changed_.wait_for(lock, std::chrono::milliseconds(100),
                              [&] { return current_->revision != delivered || stop(); });
            continue;
        }
        RenderConfig cfg = render_config();
        cfg.cancelled = [&] { return stop() || revision() != snap->revision; };
        bool finished = true;
        for (const int size : options_.preview_ladder) {
            const Framebuffer fb = render_document(snap->document, snap->buffer, size, size, cfg);
            if (!fb.complete) {
                finished = false;
                break;
            }
            const PreviewFrame frame{static_cast<uint32_t>(snap->revision), size, size, encode_png(fb)};
            if (!send(frame)) return;
        }
        if (finished) delivered = snap->revision;
    }
}

}  // namespace ff
