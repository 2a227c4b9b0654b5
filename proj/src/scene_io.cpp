#include "fractalforge/scene_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <iterator>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

namespace ff {

using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string escape_token(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Source positions: a SAX pass over the same text records where each JSON
// pointer's value lives, so semantic errors can be reported by line/column.

class CountingIterator {
public:
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator() = default;
    CountingIterator(const char* p, const char* begin, size_t* pos) : p_(p), begin_(begin), pos_(pos) {}

    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        ++p_;
        if (pos_) *pos_ = static_cast<size_t>(p_ - begin_);
        return *this;
    }
    CountingIterator operator++(int) {
        CountingIterator tmp = *this;
        ++*this;
        return tmp;
    }
    bool operator==(const CountingIterator& o) const { return p_ == o.p_; }

private:
    const char* p_ = nullptr;
    const char* begin_ = nullptr;
    size_t* pos_ = nullptr;
};

class PositionIndex : public nlohmann::json_sax<json> {
public:
    PositionIndex(std::string_view text, const size_t* pos) : text_(text), pos_(pos) {}

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override { return open(false); }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override { return open(true); }
    bool end_array() override { return close(); }
    bool key(string_t& k) override {
        frames_.back().key = k;
        key_offsets_[child_pointer()] = token_start();
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

    size_t offset(const std::string& pointer) const {
        const auto it = offsets_.find(pointer);
        return it == offsets_.end() ? 0 : it->second;
    }
    size_t key_offset(const std::string& pointer) const {
        const auto it = key_offsets_.find(pointer);
        return it == key_offsets_.end() ? offset(pointer) : it->second;
    }

private:
    struct Frame {
        bool array;
        size_t index;
        std::string key;
        std::string pointer;
    };

    std::string child_pointer() const {
        if (frames_.empty()) return "";
        const Frame& f = frames_.back();
        return f.pointer + "/" + (f.array ? std::to_string(f.index) : escape_token(f.key));
    }
    void advance() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }
    // Back from the reader position to the first character of the scalar just read.
    size_t token_start() const {
        size_t i = std::min(*pos_ > 0 ? *pos_ - 1 : 0, text_.empty() ? 0 : text_.size() - 1);
        const auto literal = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+'; };
        while (i > 0 && !literal(text_[i]) && text_[i] != '"') --i;
        if (text_[i] == '"') {
            while (i > 0) {
                --i;
                if (text_[i] != '"') continue;
                size_t slashes = 0;
                while (i >= slashes + 1 && text_[i - slashes - 1] == '\\') ++slashes;
                if (slashes % 2 == 0) return i;
            }
            return i;
        }
        while (i > 0 && literal(text_[i - 1])) --i;
        return i;
    }
    bool value() {
        offsets_[child_pointer()] = token_start();
        advance();
        return true;
    }
    bool open(bool array) {
        std::string p = child_pointer();
        offsets_[p] = *pos_ > 0 ? *pos_ - 1 : 0;
        frames_.push_back({array, 0, "", std::move(p)});
        return true;
    }
    bool close() {
        frames_.pop_back();
        advance();
        return true;
    }

    std::string_view text_;
    const size_t* pos_;
    std::vector<Frame> frames_;
    std::map<std::string, size_t> offsets_;
    std::map<std::string, size_t> key_offsets_;
};

struct Location {
    int line = 1;
    int column = 1;
};

Location locate(std::string_view text, size_t offset) {
    Location loc;
    offset = std::min(offset, text.size());
    for (size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++loc.line;
            loc.column = 1;
        } else {
            ++loc.column;
        }
    }
    return loc;
}

// ---------------------------------------------------------------------------
// Reading

class Reader {
public:
    Reader(std::string_view text, const PositionIndex& index, bool strict)
        : text_(text), index_(index), strict_(strict) {}

    [[noreturn]] void fail(ParseError::Kind kind, const std::string& pointer, const std::string& detail) const {
        const Location loc = locate(text_, kind == ParseError::Kind::UnknownField ? index_.key_offset(pointer)
                                                                                  : index_.offset(pointer));
        throw ParseError(kind, loc.line, loc.column, detail + (pointer.empty() ? "" : " (at " + pointer + ")"));
    }

    // Tracks which keys of an object were consumed so strict mode can reject the rest.
    class Object {
    public:
        Object(const Reader& r, const json& j, std::string pointer) : r_(r), j_(j), pointer_(std::move(pointer)) {
            if (!j.is_object()) r.fail(ParseError::Kind::InvalidValue, pointer_, "expected an object");
        }
        ~Object() noexcept(false) {
            if (std::uncaught_exceptions() == 0) finish();
        }

        const json* find(const std::string& key) {
            used_.insert(key);
            const auto it = j_.find(key);
            return it == j_.end() ? nullptr : &*it;
        }
        const json& require(const std::string& key) {
            const json* v = find(key);
            if (!v) r_.fail(ParseError::Kind::InvalidValue, pointer_, "missing required field '" + key + "'");
            return *v;
        }
        std::string path(const std::string& key) const { return pointer_ + "/" + escape_token(key); }
        const std::string& pointer() const { return pointer_; }

        double real(const std::string& key, double fallback) {
            const json* v = find(key);
            return v ? r_.real(*v, path(key)) : fallback;
        }
        Vec3 vec3(const std::string& key, const Vec3& fallback) {
            const json* v = find(key);
            return v ? r_.vec3(*v, path(key)) : fallback;
        }
        int integer(const std::string& key, int fallback) {
            const json* v = find(key);
            return v ? r_.integer(*v, path(key)) : fallback;
        }
        std::string string(const std::string& key) {
            const json& v = require(key);
            if (!v.is_string()) r_.fail(ParseError::Kind::InvalidValue, path(key), "expected a string");
            return v.get<std::string>();
        }

    private:
        void finish() {
            if (!r_.strict_) return;
            for (const auto& [key, value] : j_.items()) {
                if (!used_.contains(key)) r_.fail(ParseError::Kind::UnknownField, path(key), "unknown field '" + key + "'");
            }
        }

        const Reader& r_;
        const json& j_;
        std::string pointer_;
        std::set<std::string> used_;
    };

    double real(const json& j, const std::string& pointer) const {
        if (!j.is_number()) fail(ParseError::Kind::InvalidValue, pointer, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(ParseError::Kind::InvalidValue, pointer, "non-finite number");
        return v;
    }
    int integer(const json& j, const std::string& pointer) const {
        if (!j.is_number_integer()) fail(ParseError::Kind::InvalidValue, pointer, "expected an integer");
        return j.get<int>();
    }
    std::vector<double> reals(const json& j, const std::string& pointer) const {
        if (!j.is_array()) fail(ParseError::Kind::InvalidValue, pointer, "expected an array of numbers");
        std::vector<double> out;
        for (size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], pointer + "/" + std::to_string(i)));
        return out;
    }
    std::vector<double> fixed(const json& j, const std::string& pointer, size_t n) const {
        auto v = reals(j, pointer);
        if (v.size() != n) fail(ParseError::Kind::InvalidValue, pointer, "expected " + std::to_string(n) + " numbers");
        return v;
    }
    Vec3 vec3(const json& j, const std::string& pointer) const {
        const auto v = fixed(j, pointer, 3);
        return {v[0], v[1], v[2]};
    }
    Quat quat(const json& j, const std::string& pointer) const {
        const auto v = fixed(j, pointer, 4);
        return {v[0], v[1], v[2], v[3]};
    }
    Axis axis(const json& j, const std::string& pointer) const {
        if (j.is_string()) {
            if (auto a = axis_from_string(j.get<std::string>())) return *a;
        }
        fail(ParseError::Kind::InvalidValue, pointer, "axis must be \"x\", \"y\" or \"z\"");
    }

    CombineOp combine(const json& j, const std::string& pointer) const {
        if (j.is_string()) {
            const std::string name = j.get<std::string>();
            const auto kind = combine_kind_from_string(name);
            if (!kind) fail(ParseError::Kind::UnknownOperator, pointer, "unknown operator '" + name + "'");
            const CombineOp op{*kind, 0.0};
            if (op.is_smooth()) fail(ParseError::Kind::InvalidValue, pointer, "smooth operators need a smoothing radius k");
            return op;
        }
        Object o(*this, j, pointer);
        const std::string name = o.string("type");
        const auto kind = combine_kind_from_string(name);
        if (!kind) fail(ParseError::Kind::UnknownOperator, pointer + "/type", "unknown operator '" + name + "'");
        CombineOp op{*kind, 0.0};
        if (op.is_smooth()) {
            if (!j.contains("k")) fail(ParseError::Kind::InvalidValue, pointer, "smooth operators need a smoothing radius k");
            op.k = o.real("k", 0.0);
        } else if (j.contains("k")) {
            fail(ParseError::Kind::InvalidValue, pointer + "/k", "only smooth operators take k");
        }
        return op;
    }

    Modifier modifier(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        const std::string type = o.string("type");
        if (type == "round") return mod::Round{o.real("r", 0.0)};
        if (type == "onion") return mod::Onion{real(o.require("thickness"), o.path("thickness"))};
        if (type == "plane_fold") return mod::PlaneFold{vec3(o.require("normal"), o.path("normal"))};
        if (type == "mirror_fold") return mod::MirrorFold{axis(o.require("axis"), o.path("axis"))};
        if (type == "repeat") return mod::DomainRepeat{vec3(o.require("cell"), o.path("cell"))};
        fail(ParseError::Kind::InvalidValue, o.path("type"), "unknown modifier '" + type + "'");
    }

    IfsStep ifs_step(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        const std::string type = o.string("type");
        if (type == "plane_fold") return mod::PlaneFold{vec3(o.require("normal"), o.path("normal"))};
        if (type == "mirror_fold") return mod::MirrorFold{axis(o.require("axis"), o.path("axis"))};
        if (type == "rotate") {
            if (const json* q = o.find("quat")) return ifs::Rotate{quat(*q, o.path("quat"))};
            const Vec3 ax = vec3(o.require("axis"), o.path("axis"));
            if (!(length(ax) > 0.0)) fail(ParseError::Kind::InvalidValue, o.path("axis"), "rotation axis is zero");
            return ifs::Rotate{Quat::from_axis_angle(ax, real(o.require("angle_deg"), o.path("angle_deg")) * kDegToRad)};
        }
        if (type == "scale") {
            return ifs::Scale{real(o.require("factor"), o.path("factor")), o.vec3("offset", Vec3{})};
        }
        fail(ParseError::Kind::InvalidValue, o.path("type"), "unknown ifs step '" + type + "'");
    }

    IfsSequence ifs(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        IfsSequence seq;
        seq.iterations = o.integer("iterations", 0);
        if (const json* steps = o.find("steps")) {
            if (!steps->is_array()) fail(ParseError::Kind::InvalidValue, o.path("steps"), "expected an array");
            for (size_t i = 0; i < steps->size(); ++i) {
                seq.steps.push_back(ifs_step((*steps)[i], o.path("steps") + "/" + std::to_string(i)));
            }
        }
        return seq;
    }

    Transform transform(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        Transform t;
        t.translation = o.vec3("position", Vec3{});
        if (const json* q = o.find("rotation_quat")) t.rotation = quat(*q, o.path("rotation_quat"));
        t.scale = o.real("scale", 1.0);
        return t;
    }

    SceneNode node(const json& j, const std::string& pointer, std::map<int, std::string>& ids) const {
        Object o(*this, j, pointer);
        SceneNode n;
        n.id = integer(o.require("id"), o.path("id"));
        if (!ids.emplace(n.id, pointer).second) {
            fail(ParseError::Kind::CycleOrDuplicateId, o.path("id"), "node id " + std::to_string(n.id) + " is used twice");
        }
        const std::string shape = o.string("shape");
        const auto kind = primitive_kind_from_string(shape);
        if (!kind) fail(ParseError::Kind::UnknownShape, o.path("shape"), "unknown shape '" + shape + "'");
        const auto values = reals(o.require("params"), o.path("params"));
        const auto params = PrimitiveParams::from_values(*kind, values);
        if (!params) {
            fail(ParseError::Kind::ArityMismatch, o.path("params"),
                 shape + " takes " + std::to_string(arity(*kind)) + " parameters, got " + std::to_string(values.size()));
        }
        n.primitive = *params;
        if (const json* t = o.find("transform")) n.transform = transform(*t, o.path("transform"));
        if (const json* op = o.find("op")) n.combine = combine(*op, o.path("op"));
        if (const json* mods = o.find("modifiers")) {
            if (!mods->is_array()) fail(ParseError::Kind::InvalidValue, o.path("modifiers"), "expected an array");
            for (size_t i = 0; i < mods->size(); ++i) {
                n.modifiers.push_back(modifier((*mods)[i], o.path("modifiers") + "/" + std::to_string(i)));
            }
        }
        n.material = o.integer("material", 0);
        if (const json* children = o.find("children")) {
            if (!children->is_array()) fail(ParseError::Kind::InvalidValue, o.path("children"), "expected an array");
            for (size_t i = 0; i < children->size(); ++i) {
                n.children.push_back(node((*children)[i], o.path("children") + "/" + std::to_string(i), ids));
            }
        }
        return n;
    }

    Material material(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        Material m;
        m.id = integer(o.require("id"), o.path("id"));
        m.albedo = o.vec3("albedo", m.albedo);
        m.specular = o.vec3("specular", m.specular);
        m.shininess = o.real("shininess", m.shininess);
        return m;
    }

    Light light(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        Light l;
        const std::string type = o.string("type");
        if (type == "directional") {
            l.type = Light::Type::Directional;
            l.vector = vec3(o.require("direction"), o.path("direction"));
        } else if (type == "point") {
            l.type = Light::Type::Point;
            l.vector = vec3(o.require("position"), o.path("position"));
        } else {
            fail(ParseError::Kind::InvalidValue, o.path("type"), "unknown light type '" + type + "'");
        }
        l.color = o.vec3("color", l.color);
        l.intensity = o.real("intensity", l.intensity);
        return l;
    }

    Skybox skybox(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        Skybox s;
        const std::string type = o.string("type");
        if (type == "gradient") {
            s.type = Skybox::Type::Gradient;
            s.horizon = o.vec3("horizon", s.horizon);
            s.zenith = o.vec3("zenith", s.zenith);
        } else if (type == "image") {
            s.type = Skybox::Type::Image;
            s.image_path = o.string("path");
        } else {
            fail(ParseError::Kind::InvalidValue, o.path("type"), "unknown skybox type '" + type + "'");
        }
        return s;
    }

    LightingConfig lighting(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        LightingConfig l;
        l.ambient = o.vec3("ambient", l.ambient);
        l.shadow_sharpness = o.real("shadow_sharpness", l.shadow_sharpness);
        if (const json* lights = o.find("lights")) {
            if (!lights->is_array()) fail(ParseError::Kind::InvalidValue, o.path("lights"), "expected an array");
            l.lights.clear();
            for (size_t i = 0; i < lights->size(); ++i) {
                l.lights.push_back(light((*lights)[i], o.path("lights") + "/" + std::to_string(i)));
            }
        }
        if (const json* s = o.find("skybox")) l.skybox = skybox(*s, o.path("skybox"));
        return l;
    }

    CameraSpec camera(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        CameraSpec c;
        c.position = o.vec3("position", c.position);
        c.target = o.vec3("target", c.target);
        c.up = o.vec3("up", c.up);
        c.fov_deg = o.real("fov_deg", c.fov_deg);
        if (!(c.fov_deg > 0.0 && c.fov_deg < 180.0)) fail(ParseError::Kind::InvalidValue, o.path("fov_deg"), "fov must lie in (0, 180)");
        const Vec3 f = c.target - c.position;
        if (!(length(f) > 0.0) || !(length(cross(f, c.up)) > 0.0)) {
            fail(ParseError::Kind::InvalidValue, o.pointer(), "camera position, target and up are degenerate");
        }
        return c;
    }

    AnimationTrack track(const json& j, const std::string& pointer) const {
        Object o(*this, j, pointer);
        AnimationTrack t;
        t.target = o.string("target");
        const json& keys = o.require("keys");
        if (!keys.is_array() || keys.empty()) fail(ParseError::Kind::InvalidTrack, o.path("keys"), "a track needs at least one key");
        for (size_t i = 0; i < keys.size(); ++i) {
            const std::string kp = o.path("keys") + "/" + std::to_string(i);
            Object k(*this, keys[i], kp);
            Keyframe key;
            key.time = real(k.require("t"), k.path("t"));
            const json& value = k.require("value");
            key.value = value.is_number() ? std::vector<double>{real(value, k.path("value"))} : reals(value, k.path("value"));
            if (!t.keys.empty() && !(key.time > t.keys.back().time)) {
                fail(ParseError::Kind::InvalidTrack, k.path("t"), "key times must be strictly increasing");
            }
            t.keys.push_back(std::move(key));
        }
        return t;
    }

private:
    std::string_view text_;
    const PositionIndex& index_;
    bool strict_;
};

// ---------------------------------------------------------------------------
// Writing

json arr(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json arr(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

json write_modifier(const Modifier& m) {
    if (const auto* r = std::get_if<mod::Round>(&m)) return {{"type", "round"}, {"r", r->radius}};
    if (const auto* o = std::get_if<mod::Onion>(&m)) return {{"type", "onion"}, {"thickness", o->thickness}};
    if (const auto* f = std::get_if<mod::PlaneFold>(&m)) return {{"type", "plane_fold"}, {"normal", arr(f->normal)}};
    if (const auto* f = std::get_if<mod::MirrorFold>(&m)) return {{"type", "mirror_fold"}, {"axis", std::string(to_string(f->axis))}};
    return {{"type", "repeat"}, {"cell", arr(std::get<mod::DomainRepeat>(m).cell)}};
}

json write_step(const IfsStep& s) {
    if (const auto* f = std::get_if<mod::PlaneFold>(&s)) return {{"type", "plane_fold"}, {"normal", arr(f->normal)}};
    if (const auto* f = std::get_if<mod::MirrorFold>(&s)) return {{"type", "mirror_fold"}, {"axis", std::string(to_string(f->axis))}};
    if (const auto* r = std::get_if<ifs::Rotate>(&s)) return {{"type", "rotate"}, {"quat", arr(r->rotation)}};
    const auto& sc = std::get<ifs::Scale>(s);
    return {{"type", "scale"}, {"factor", sc.factor}, {"offset", arr(sc.offset)}};
}

json write_op(const CombineOp& op) {
    if (!op.is_smooth()) return std::string(to_string(op.kind));
    return {{"type", std::string(to_string(op.kind))}, {"k", op.k}};
}

json write_node(const SceneNode& n) {
    json j;
    j["id"] = n.id;
    j["shape"] = std::string(to_string(n.primitive.kind));
    j["params"] = json(std::vector<double>(n.primitive.active().begin(), n.primitive.active().end()));
    j["transform"] = {{"position", arr(n.transform.translation)},
                      {"rotation_quat", arr(n.transform.rotation)},
                      {"scale", n.transform.scale}};
    j["op"] = write_op(n.combine);
    j["modifiers"] = json::array();
    for (const auto& m : n.modifiers) j["modifiers"].push_back(write_modifier(m));
    j["material"] = n.material;
    j["children"] = json::array();
    for (const auto& c : n.children) j["children"].push_back(write_node(c));
    return j;
}

json write_lighting(const LightingConfig& l) {
    json j;
    j["ambient"] = arr(l.ambient);
    j["shadow_sharpness"] = l.shadow_sharpness;
    j["lights"] = json::array();
    for (const auto& light : l.lights) {
        json lj{{"color", arr(light.color)}, {"intensity", light.intensity}};
        if (light.type == Light::Type::Directional) {
            lj["type"] = "directional";
            lj["direction"] = arr(light.vector);
        } else {
            lj["type"] = "point";
            lj["position"] = arr(light.vector);
        }
        j["lights"].push_back(lj);
    }
    if (l.skybox.type == Skybox::Type::Gradient) {
        j["skybox"] = {{"type", "gradient"}, {"horizon", arr(l.skybox.horizon)}, {"zenith", arr(l.skybox.zenith)}};
    } else {
        j["skybox"] = {{"type", "image"}, {"path", l.skybox.image_path}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Track targets

struct TargetRef {
    enum class Kind { NodeParams, NodeParam, NodePosition, NodeRotation, NodeScale, IfsFactor, IfsOffset, IfsRotation,
                      IfsNormal, CameraPosition, CameraTarget, CameraFov };
    Kind kind;
    int id = 0;       // node id or ifs step index
    int param = 0;    // NodeParam slot
};

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (true) {
        const size_t slash = s.find('/', start);
        parts.push_back(s.substr(start, slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return parts;
}

std::optional<int> to_int(std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

TargetRef resolve(const SceneDocument& doc, std::string_view target) {
    const auto parts = split(target);
    const auto bad = [&]() -> std::invalid_argument {
        return std::invalid_argument("unknown animation target '" + std::string(target) + "'");
    };
    if (parts.size() >= 3 && parts[0] == "node") {
        const auto id = to_int(parts[1]);
        if (!id) throw bad();
        const SceneNode* node = nullptr;
        try {
            node = &find_node(doc.tree, *id);
        } catch (const UnknownNodeId&) {
            throw bad();
        }
        if (parts.size() == 3) {
            if (parts[2] == "params") return {TargetRef::Kind::NodeParams, *id};
            if (parts[2] == "position") return {TargetRef::Kind::NodePosition, *id};
            if (parts[2] == "rotation") return {TargetRef::Kind::NodeRotation, *id};
            if (parts[2] == "scale") return {TargetRef::Kind::NodeScale, *id};
        } else if (parts.size() == 4 && parts[2] == "params") {
            const auto names = parameter_names(node->primitive.kind);
            for (size_t i = 0; i < names.size(); ++i) {
                if (names[i] == parts[3]) return {TargetRef::Kind::NodeParam, *id, static_cast<int>(i)};
            }
        }
        throw bad();
    }
    if (parts.size() == 3 && parts[0] == "ifs") {
        const auto index = to_int(parts[1]);
        if (!index || *index < 0 || *index >= static_cast<int>(doc.tree.ifs.steps.size())) throw bad();
        const IfsStep& step = doc.tree.ifs.steps[*index];
        if (parts[2] == "factor" && std::holds_alternative<ifs::Scale>(step)) return {TargetRef::Kind::IfsFactor, *index};
        if (parts[2] == "offset" && std::holds_alternative<ifs::Scale>(step)) return {TargetRef::Kind::IfsOffset, *index};
        if (parts[2] == "rotation" && std::holds_alternative<ifs::Rotate>(step)) return {TargetRef::Kind::IfsRotation, *index};
        if (parts[2] == "normal" && std::holds_alternative<mod::PlaneFold>(step)) return {TargetRef::Kind::IfsNormal, *index};
        throw bad();
    }
    if (parts.size() == 2 && parts[0] == "camera") {
        if (parts[1] == "position") return {TargetRef::Kind::CameraPosition};
        if (parts[1] == "target") return {TargetRef::Kind::CameraTarget};
        if (parts[1] == "fov_deg") return {TargetRef::Kind::CameraFov};
    }
    throw bad();
}

size_t arity_of(const SceneDocument& doc, const TargetRef& ref) {
    switch (ref.kind) {
        case TargetRef::Kind::NodeParams: return static_cast<size_t>(arity(find_node(doc.tree, ref.id).primitive.kind));
        case TargetRef::Kind::NodeRotation:
        case TargetRef::Kind::IfsRotation: return 4;
        case TargetRef::Kind::NodePosition:
        case TargetRef::Kind::IfsOffset:
        case TargetRef::Kind::IfsNormal:
        case TargetRef::Kind::CameraPosition:
        case TargetRef::Kind::CameraTarget: return 3;
        default: return 1;
    }
}

Vec3 v3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }
Quat q4(const std::vector<double>& v) { return Quat{v[0], v[1], v[2], v[3]}.normalized(); }

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const Location loc = locate(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(ParseError::Kind::SyntaxError, loc.line, loc.column, e.what());
    }
}

template <class Fn>
auto parse_fragment(std::string_view text, bool strict, Fn&& fn) {
    const json root = parse_json(text);
    size_t pos = 0;
    PositionIndex index(text, &pos);
    json::sax_parse(CountingIterator(text.data(), text.data(), &pos),
                    CountingIterator(text.data() + text.size(), text.data(), nullptr), &index);
    const Reader r(text, index, strict);
    return fn(r, root);
}

}  // namespace

// ---------------------------------------------------------------------------

ParseError::ParseError(Kind kind, int line, int column, const std::string& detail)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + std::string(to_string(kind)) +
                         ": " + detail),
      kind_(kind),
      line_(line),
      column_(column),
      detail_(detail) {}

std::string_view to_string(ParseError::Kind kind) {
    switch (kind) {
        case ParseError::Kind::SyntaxError: return "SyntaxError";
        case ParseError::Kind::UnknownShape: return "UnknownShape";
        case ParseError::Kind::ArityMismatch: return "ArityMismatch";
        case ParseError::Kind::UnknownOperator: return "UnknownOperator";
        case ParseError::Kind::CycleOrDuplicateId: return "CycleOrDuplicateId";
        case ParseError::Kind::UnknownField: return "UnknownField";
        case ParseError::Kind::InvalidValue: return "InvalidValue";
        case ParseError::Kind::InvalidTrack: return "InvalidTrack";
        case ParseError::Kind::ValidationFailed: return "ValidationFailed";
    }
    return "Unknown";
}

Camera CameraSpec::to_camera(int width, int height) const {
    return Camera::look_at(position, target, up, fov_deg * kDegToRad, width, height);
}

SceneNode parse_node(std::string_view text, bool strict) {
    return parse_fragment(text, strict, [](const Reader& r, const json& j) {
        std::map<int, std::string> ids;
        return r.node(j, "", ids);
    });
}

Transform parse_transform(std::string_view text, bool strict) {
    return parse_fragment(text, strict, [](const Reader& r, const json& j) { return r.transform(j, ""); });
}

IfsSequence parse_ifs(std::string_view text, bool strict) {
    return parse_fragment(text, strict, [](const Reader& r, const json& j) { return r.ifs(j, ""); });
}

LightingConfig parse_lighting(std::string_view text, bool strict) {
    return parse_fragment(text, strict, [](const Reader& r, const json& j) { return r.lighting(j, ""); });
}

CameraSpec parse_camera(std::string_view text, bool strict) {
    return parse_fragment(text, strict, [](const Reader& r, const json& j) { return r.camera(j, ""); });
}

namespace {

SceneDocument read_document(const Reader& r, const json& root) {
    SceneDocument doc;
    std::map<int, std::string> node_pointers;
    {
        Reader::Object o(r, root, "");
        doc.version = o.integer("version", kSceneFormatVersion);
        if (doc.version != kSceneFormatVersion) {
            r.fail(ParseError::Kind::InvalidValue, "/version", "unsupported version " + std::to_string(doc.version));
        }
        if (const json* c = o.find("camera")) doc.camera = r.camera(*c, "/camera");
        if (const json* m = o.find("materials")) {
            if (!m->is_array()) r.fail(ParseError::Kind::InvalidValue, "/materials", "expected an array");
            doc.tree.materials.clear();
            for (size_t i = 0; i < m->size(); ++i) doc.tree.materials.push_back(r.material((*m)[i], "/materials/" + std::to_string(i)));
        }
        if (const json* l = o.find("lighting")) doc.tree.lighting = r.lighting(*l, "/lighting");
        if (const json* f = o.find("ifs")) doc.tree.ifs = r.ifs(*f, "/ifs");
        if (const json* n = o.find("root"); n && !n->is_null()) doc.tree.root = r.node(*n, "/root", node_pointers);
        if (const json* a = o.find("animation")) {
            if (!a->is_array()) r.fail(ParseError::Kind::InvalidValue, "/animation", "expected an array");
            for (size_t i = 0; i < a->size(); ++i) doc.animation.push_back(r.track((*a)[i], "/animation/" + std::to_string(i)));
        }
    }

    if (const auto violations = validate(doc.tree); !violations.empty()) {
        const Violation& v = violations.front();
        std::string pointer;
        if (v.node_id) {
            if (const auto it = node_pointers.find(*v.node_id); it != node_pointers.end()) pointer = it->second;
        } else if (v.rule == Violation::Rule::InvalidLighting) {
            pointer = "/lighting";
        } else if (v.rule == Violation::Rule::InvalidIfsStep || v.rule == Violation::Rule::NegativeIterations) {
            pointer = "/ifs";
        } else if (v.rule == Violation::Rule::InvalidMaterial) {
            pointer = "/materials";
        }
        std::string detail = to_string(v);
        if (violations.size() > 1) detail += " (+" + std::to_string(violations.size() - 1) + " more)";
        r.fail(ParseError::Kind::ValidationFailed, pointer, detail);
    }
    for (size_t i = 0; i < doc.animation.size(); ++i) {
        const AnimationTrack& t = doc.animation[i];
        const std::string pointer = "/animation/" + std::to_string(i);
        size_t n = 0;
        try {
            n = target_arity(doc, t.target);
        } catch (const std::invalid_argument& e) {
            r.fail(ParseError::Kind::InvalidTrack, pointer + "/target", e.what());
        }
        for (const auto& k : t.keys) {
            if (k.value.size() != n) {
                r.fail(ParseError::Kind::InvalidTrack, pointer, "track '" + t.target + "' expects " + std::to_string(n) + " values per key");
            }
        }
    }
    return doc;
}

}  // namespace

SceneDocument parse_scene(std::string_view text, bool strict) {
    return parse_fragment(text, strict, read_document);
}

std::string serialize_scene(const SceneDocument& doc) {
    json j;
    j["version"] = doc.version;
    if (doc.camera) {
        j["camera"] = {{"position", arr(doc.camera->position)},
                       {"target", arr(doc.camera->target)},
                       {"up", arr(doc.camera->up)},
                       {"fov_deg", doc.camera->fov_deg}};
    }
    j["materials"] = json::array();
    for (const auto& m : doc.tree.materials) {
        j["materials"].push_back({{"id", m.id}, {"albedo", arr(m.albedo)}, {"specular", arr(m.specular)}, {"shininess", m.shininess}});
    }
    j["lighting"] = write_lighting(doc.tree.lighting);
    j["ifs"] = {{"iterations", doc.tree.ifs.iterations}, {"steps", json::array()}};
    for (const auto& s : doc.tree.ifs.steps) j["ifs"]["steps"].push_back(write_step(s));
    j["root"] = doc.tree.root ? write_node(*doc.tree.root) : json(nullptr);
    j["animation"] = json::array();
    for (const auto& t : doc.animation) {
        json keys = json::array();
        for (const auto& k : t.keys) keys.push_back({{"t", k.time}, {"value", k.value}});
        j["animation"].push_back({{"target", t.target}, {"keys", keys}});
    }
    return j.dump(2) + "\n";
}

std::vector<TrackSample> sample_tracks(std::span<const AnimationTrack> tracks, double t) {
    std::vector<TrackSample> out;
    for (const auto& track : tracks) {
        if (track.keys.empty()) continue;
        TrackSample s{track.target, {}};
        const auto& keys = track.keys;
        if (t <= keys.front().time) {
            s.value = keys.front().value;
        } else if (t >= keys.back().time) {
            s.value = keys.back().value;
        } else {
            const auto next = std::upper_bound(keys.begin(), keys.end(), t,
                                               [](double v, const Keyframe& k) { return v < k.time; });
            const auto prev = next - 1;
            const double u = (t - prev->time) / (next->time - prev->time);
            s.value.resize(prev->value.size());
            for (size_t i = 0; i < s.value.size(); ++i) s.value[i] = prev->value[i] + (next->value[i] - prev->value[i]) * u;
        }
        out.push_back(std::move(s));
    }
    return out;
}

size_t target_arity(const SceneDocument& doc, std::string_view target) { return arity_of(doc, resolve(doc, target)); }

SceneDocument apply_samples(SceneDocument doc, std::span<const TrackSample> samples) {
    for (const auto& s : samples) {
        const TargetRef ref = resolve(doc, s.target);
        if (s.value.size() != arity_of(doc, ref)) throw std::invalid_argument("sample arity mismatch for " + s.target);
        switch (ref.kind) {
            case TargetRef::Kind::NodeParams: {
                SceneNode& n = find_node(doc.tree, ref.id);
                n.primitive = *PrimitiveParams::from_values(n.primitive.kind, s.value);
                break;
            }
            case TargetRef::Kind::NodeParam: find_node(doc.tree, ref.id).primitive.values[ref.param] = s.value[0]; break;
            case TargetRef::Kind::NodePosition: find_node(doc.tree, ref.id).transform.translation = v3(s.value); break;
            case TargetRef::Kind::NodeRotation: find_node(doc.tree, ref.id).transform.rotation = q4(s.value); break;
            case TargetRef::Kind::NodeScale: find_node(doc.tree, ref.id).transform.scale = s.value[0]; break;
            case TargetRef::Kind::IfsFactor: std::get<ifs::Scale>(doc.tree.ifs.steps[ref.id]).factor = s.value[0]; break;
            case TargetRef::Kind::IfsOffset: std::get<ifs::Scale>(doc.tree.ifs.steps[ref.id]).offset = v3(s.value); break;
            case TargetRef::Kind::IfsRotation: std::get<ifs::Rotate>(doc.tree.ifs.steps[ref.id]).rotation = q4(s.value); break;
            case TargetRef::Kind::IfsNormal:
                std::get<mod::PlaneFold>(doc.tree.ifs.steps[ref.id]).normal = normalize(v3(s.value));
                break;
            case TargetRef::Kind::CameraPosition:
                if (!doc.camera) doc.camera = CameraSpec{};
                doc.camera->position = v3(s.value);
                break;
            case TargetRef::Kind::CameraTarget:
                if (!doc.camera) doc.camera = CameraSpec{};
                doc.camera->target = v3(s.value);
                break;
            case TargetRef::Kind::CameraFov:
                if (!doc.camera) doc.camera = CameraSpec{};
                doc.camera->fov_deg = s.value[0];
                break;
        }
    }
    return doc;
}

SceneDocument document_at(const SceneDocument& doc, double t) {
    const auto samples = sample_tracks(doc.animation, t);
    return apply_samples(doc, samples);
}

}  // namespace ff
