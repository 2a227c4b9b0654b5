#include "fractalforge/compiler.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace ff {

namespace {

void encode_transform(InstructionMatrix& m, const Transform& t) {
    m[slot::kTranslation + 0] = t.translation.x;
    m[slot::kTranslation + 1] = t.translation.y;
    m[slot::kTranslation + 2] = t.translation.z;
    m[slot::kRotation + 0] = t.rotation.w * t.scale;
    m[slot::kRotation + 1] = t.rotation.x * t.scale;
    m[slot::kRotation + 2] = t.rotation.y * t.scale;
    m[slot::kRotation + 3] = t.rotation.z * t.scale;
}

void encode_params(InstructionMatrix& m, const PrimitiveParams& params) {
    for (int i = 0; i < kMaxPrimitiveArity; ++i) m[slot::kParams + i] = params.values[i];
}

struct Compiler {
    InstructionBuffer out;

    void node(const SceneNode& n, int depth) {
        if (depth > kMaxTreeDepth) {
            throw CompileError(CompileError::Kind::TreeTooDeep,
                               "tree depth exceeds " + std::to_string(kMaxTreeDepth));
        }
        InstructionMatrix m{};
        encode_transform(m, n.transform);
        encode_params(m, n.primitive);
        m[slot::kMaterial] = static_cast<double>(n.material);
        m[slot::kOpcode] = static_cast<double>(static_cast<int>(n.primitive.kind));
        out.node_index[n.id] = out.instructions.size();
        out.instructions.push_back(m);
        out.modifier_ranges.push_back(
            {static_cast<uint32_t>(out.modifiers.size()), static_cast<uint32_t>(n.modifiers.size())});
        out.modifiers.insert(out.modifiers.end(), n.modifiers.begin(), n.modifiers.end());

        for (const auto& child : n.children) {
            node(child, depth + 1);
            InstructionMatrix op{};
            op[slot::kSmoothing] = child.combine.is_smooth() ? child.combine.k : 0.0;
            op[slot::kOpcode] = -static_cast<double>(static_cast<int>(child.combine.kind));
            out.instructions.push_back(op);
            out.modifier_ranges.push_back({static_cast<uint32_t>(out.modifiers.size()), 0});
        }
    }
};

}  // namespace

InstructionBuffer compile(const SceneTree& tree) {
    if (const int n = node_count(tree); n > kMaxNodes) {
        throw CompileError(CompileError::Kind::TooManyNodes,
                           std::to_string(n) + " nodes exceeds " + std::to_string(kMaxNodes));
    }
    Compiler c;
    c.out.ifs = tree.ifs;
    if (tree.root) c.node(*tree.root, 1);
    return std::move(c.out);
}

Sample interpret(const InstructionBuffer& buffer, const Vec3& p) {
    if (buffer.instructions.empty()) return {std::numeric_limits<double>::infinity(), -1};
    if (buffer.modifier_ranges.size() != buffer.instructions.size()) {
        throw MalformedBuffer("modifier table does not match instruction count");
    }

    std::array<Sample, kValueStackCapacity> stack;
    int depth = 0;
    const IfsResult folded = apply_ifs(buffer.ifs, p);

    for (size_t i = 0; i < buffer.instructions.size(); ++i) {
        const InstructionMatrix& m = buffer.instructions[i];
        const int opcode = static_cast<int>(m[slot::kOpcode]);
        if (opcode > 0) {
            const auto kind = primitive_kind_from_tag(opcode);
            if (!kind) throw MalformedBuffer("unknown primitive opcode " + std::to_string(opcode));
            if (depth == kValueStackCapacity) throw MalformedBuffer("value stack overflow");

            const Quat scaled{m[slot::kRotation], m[slot::kRotation + 1], m[slot::kRotation + 2],
                              m[slot::kRotation + 3]};
            const double scale = scaled.norm();
            const Quat rotation{scaled.w / scale, scaled.x / scale, scaled.y / scale, scaled.z / scale};
            const Vec3 translation{m[0], m[1], m[2]};
            Vec3 q = rotate_inverse(rotation, folded.p - translation) / scale;

            const ModifierRange range = buffer.modifier_ranges[i];
            const Modifier* mods = buffer.modifiers.data() + range.begin;
            for (uint32_t k = 0; k < range.count; ++k) {
                if (is_space_modifier(mods[k])) q = apply_modifier(mods[k], q);
            }
            PrimitiveParams params{*kind, {}};
            std::memcpy(params.values.data(), m.data() + slot::kParams, sizeof(double) * kMaxPrimitiveArity);
            double d = evaluate_primitive(params, q);
            for (uint32_t k = 0; k < range.count; ++k) {
                if (!is_space_modifier(mods[k])) d = adjust_distance(mods[k], d);
            }
            stack[depth++] = {d * scale, static_cast<int>(m[slot::kMaterial])};
        } else if (opcode < 0) {
            const auto kind = combine_kind_from_tag(-opcode);
            if (!kind) throw MalformedBuffer("unknown operator opcode " + std::to_string(opcode));
            if (depth < 2) throw MalformedBuffer("value stack underflow");
            const Sample child = stack[--depth];
            stack[depth - 1] = combine_samples({*kind, m[slot::kSmoothing]}, stack[depth - 1], child);
        } else {
            throw MalformedBuffer("zero opcode");
        }
    }
    if (depth != 1) throw MalformedBuffer("buffer leaves " + std::to_string(depth) + " values on the stack");
    Sample result = stack[0];
    result.distance /= folded.scale;
    return result;
}

void verify_postfix(const InstructionBuffer& buffer) {
    if (buffer.modifier_ranges.size() != buffer.instructions.size()) {
        throw MalformedBuffer("modifier table does not match instruction count");
    }
    int depth = 0;
    for (size_t i = 0; i < buffer.instructions.size(); ++i) {
        const double raw = buffer.instructions[i][slot::kOpcode];
        const int opcode = static_cast<int>(raw);
        if (static_cast<double>(opcode) != raw) throw MalformedBuffer("non-integral opcode");
        const auto range = buffer.modifier_ranges[i];
        if (static_cast<size_t>(range.begin) + range.count > buffer.modifiers.size()) {
            throw MalformedBuffer("modifier range out of bounds");
        }
        if (opcode > 0) {
            if (!primitive_kind_from_tag(opcode)) throw MalformedBuffer("unknown primitive opcode");
            if (++depth > kValueStackCapacity) throw MalformedBuffer("value stack overflow");
        } else if (opcode < 0) {
            if (!combine_kind_from_tag(-opcode)) throw MalformedBuffer("unknown operator opcode");
            if (range.count != 0) throw MalformedBuffer("operator instruction carries modifiers");
            if (depth < 2) throw MalformedBuffer("value stack underflow");
            --depth;
        } else {
            throw MalformedBuffer("zero opcode");
        }
    }
    if (!buffer.instructions.empty() && depth != 1) throw MalformedBuffer("final stack depth is not one");
}

namespace {
InstructionMatrix& instruction_for(InstructionBuffer& buffer, int node_id) {
    const auto it = buffer.node_index.find(node_id);
    if (it == buffer.node_index.end()) throw UnknownNodeId(node_id);
    return buffer.instructions.at(it->second);
}
}  // namespace

void update_params(InstructionBuffer& buffer, int node_id, const PrimitiveParams& params) {
    InstructionMatrix& m = instruction_for(buffer, node_id);
    if (static_cast<int>(m[slot::kOpcode]) != static_cast<int>(params.kind)) {
        throw KindChangeRequiresRecompile("node " + std::to_string(node_id) + " cannot change kind to " +
                                          std::string(to_string(params.kind)) + " without recompiling");
    }
    encode_params(m, params);
}

void update_transform(InstructionBuffer& buffer, int node_id, const Transform& transform) {
    encode_transform(instruction_for(buffer, node_id), transform);
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    bool done() const { return pos_ == bytes_.size(); }
    uint64_t u64() {
        if (bytes_.size() - pos_ < 8) throw MalformedBuffer("truncated buffer dump");
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }

private:
    std::string_view bytes_;
    size_t pos_ = 0;
};

// Side-table tags
enum ModTag { kRound = 0, kOnion = 1, kPlaneFold = 2, kMirrorFold = 3, kRepeat = 4 };
enum StepTag { kStepPlaneFold = 0, kStepMirrorFold = 1, kStepRotate = 2, kStepScale = 3 };

std::array<double, 4> encode_modifier(const Modifier& m) {
    switch (m.index()) {
        case 0: return {kRound, std::get<mod::Round>(m).radius, 0, 0};
        case 1: return {kOnion, std::get<mod::Onion>(m).thickness, 0, 0};
        case 2: {
            const Vec3 n = std::get<mod::PlaneFold>(m).normal;
            return {kPlaneFold, n.x, n.y, n.z};
        }
        case 3: return {kMirrorFold, static_cast<double>(std::get<mod::MirrorFold>(m).axis), 0, 0};
        default: {
            const Vec3 c = std::get<mod::DomainRepeat>(m).cell;
            return {kRepeat, c.x, c.y, c.z};
        }
    }
}

Modifier decode_modifier(const std::array<double, 4>& v) {
    switch (static_cast<int>(v[0])) {
        case kRound: return mod::Round{v[1]};
        case kOnion: return mod::Onion{v[1]};
        case kPlaneFold: return mod::PlaneFold{{v[1], v[2], v[3]}};
        case kMirrorFold: {
            const int axis = static_cast<int>(v[1]);
            if (axis < 0 || axis > 2) throw MalformedBuffer("bad mirror axis");
            return mod::MirrorFold{static_cast<Axis>(axis)};
        }
        case kRepeat: return mod::DomainRepeat{{v[1], v[2], v[3]}};
    }
    throw MalformedBuffer("unknown modifier tag");
}

std::array<double, 5> encode_step(const IfsStep& s) {
    switch (s.index()) {
        case 0: {
            const Vec3 n = std::get<mod::PlaneFold>(s).normal;
            return {kStepPlaneFold, n.x, n.y, n.z, 0};
        }
        case 1: return {kStepMirrorFold, static_cast<double>(std::get<mod::MirrorFold>(s).axis), 0, 0, 0};
        case 2: {
            const Quat q = std::get<ifs::Rotate>(s).rotation;
            return {kStepRotate, q.w, q.x, q.y, q.z};
        }
        default: {
            const auto& sc = std::get<ifs::Scale>(s);
            return {kStepScale, sc.factor, sc.offset.x, sc.offset.y, sc.offset.z};
        }
    }
}

IfsStep decode_step(const std::array<double, 5>& v) {
    switch (static_cast<int>(v[0])) {
        case kStepPlaneFold: return mod::PlaneFold{{v[1], v[2], v[3]}};
        case kStepMirrorFold: {
            const int axis = static_cast<int>(v[1]);
            if (axis < 0 || axis > 2) throw MalformedBuffer("bad mirror axis");
            return mod::MirrorFold{static_cast<Axis>(axis)};
        }
        case kStepRotate: return ifs::Rotate{{v[1], v[2], v[3], v[4]}};
        case kStepScale: return ifs::Scale{v[1], {v[2], v[3], v[4]}};
    }
    throw MalformedBuffer("unknown ifs step tag");
}

}  // namespace

std::string dump_buffer(const InstructionBuffer& buffer) {
    std::string out;
    put_u64(out, buffer.instructions.size());
    for (const auto& m : buffer.instructions) {
        for (double v : m) put_f64(out, v);
    }

    std::vector<int> ids(buffer.instructions.size(), 0);
    for (const auto& [id, pos] : buffer.node_index) ids.at(pos) = id;

    std::vector<double> side;
    for (size_t i = 0; i < buffer.modifier_ranges.size(); ++i) {
        const ModifierRange range = buffer.modifier_ranges[i];
        side.push_back(ids[i]);
        side.push_back(range.count);
        for (uint32_t k = 0; k < range.count; ++k) {
            for (double v : encode_modifier(buffer.modifiers[range.begin + k])) side.push_back(v);
        }
    }
    side.push_back(buffer.ifs.iterations);
    side.push_back(static_cast<double>(buffer.ifs.steps.size()));
    for (const auto& s : buffer.ifs.steps) {
        for (double v : encode_step(s)) side.push_back(v);
    }
    put_u64(out, side.size());
    for (double v : side) put_f64(out, v);
    return out;
}

InstructionBuffer restore_buffer(std::string_view bytes) {
    Reader in(bytes);
    InstructionBuffer buffer;
    const uint64_t count = in.u64();
    if (count > bytes.size() / (16 * 8)) throw MalformedBuffer("instruction count exceeds dump size");
    buffer.instructions.resize(count);
    for (auto& m : buffer.instructions) {
        for (double& v : m) v = in.f64();
    }

    if (in.done()) {
        // Bare matrices: positions stand in for node ids.
        buffer.modifier_ranges.assign(count, ModifierRange{});
        for (size_t i = 0; i < buffer.instructions.size(); ++i) {
            if (buffer.instructions[i][slot::kOpcode] > 0) buffer.node_index[static_cast<int>(i)] = i;
        }
    } else {
        const uint64_t side_count = in.u64();
        std::vector<double> side(side_count);
        for (double& v : side) v = in.f64();
        size_t at = 0;
        const auto take = [&]() {
            if (at >= side.size()) throw MalformedBuffer("truncated side table");
            return side[at++];
        };
        for (uint64_t i = 0; i < count; ++i) {
            const auto id = static_cast<int>(take());
            if (buffer.instructions[i][slot::kOpcode] > 0) buffer.node_index[id] = i;
            const auto n = static_cast<uint32_t>(take());
            buffer.modifier_ranges.push_back({static_cast<uint32_t>(buffer.modifiers.size()), n});
            for (uint32_t k = 0; k < n; ++k) {
                std::array<double, 4> v{};
                for (double& x : v) x = take();
                buffer.modifiers.push_back(decode_modifier(v));
            }
        }
        buffer.ifs.iterations = static_cast<int>(take());
        const auto steps = static_cast<size_t>(take());
        for (size_t s = 0; s < steps; ++s) {
            std::array<double, 5> v{};
            for (double& x : v) x = take();
            buffer.ifs.steps.push_back(decode_step(v));
        }
        if (at != side.size() || !in.done()) throw MalformedBuffer("trailing bytes in buffer dump");
    }

    verify_postfix(buffer);
    return buffer;
}

}  // namespace ff
