#include <charconv>
#include <set>
#include <sstream>

#include "fractalforge/compiler.hpp"

namespace ff {

namespace {

std::string lit(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string lit(const Vec3& v) { return "float3(" + lit(v.x) + ", " + lit(v.y) + ", " + lit(v.z) + ")"; }

std::string_view primitive_function(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Sphere: return "sdSphere";
        case PrimitiveKind::Box: return "sdBox";
        case PrimitiveKind::BoxFrame: return "sdBoxFrame";
        case PrimitiveKind::Torus: return "sdTorus";
        case PrimitiveKind::Plane: return "sdPlane";
        case PrimitiveKind::Cylinder: return "sdCylinder";
        case PrimitiveKind::Capsule: return "sdCapsule";
        case PrimitiveKind::Octahedron: return "sdOctahedron";
        case PrimitiveKind::HexPrism: return "sdHexPrism";
        case PrimitiveKind::RoundCone: return "sdRoundCone";
    }
    return "sdUnknown";
}

std::string_view operator_function(CombineOp::Kind kind) {
    switch (kind) {
        case CombineOp::Kind::Union: return "opUnion";
        case CombineOp::Kind::Subtract: return "opSubtract";
        case CombineOp::Kind::Intersect: return "opIntersect";
        case CombineOp::Kind::SmoothUnion: return "opSmoothUnion";
        case CombineOp::Kind::SmoothSubtract: return "opSmoothSubtract";
        case CombineOp::Kind::SmoothIntersect: return "opSmoothIntersect";
    }
    return "opUnknown";
}

std::string_view primitive_source(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Sphere:
            return "float sdSphere(float3 p, float r) { return length(p) - r; }\n";
        case PrimitiveKind::Box:
            return "float sdBox(float3 p, float3 b)\n"
                   "{\n"
                   "    float3 q = abs(p) - b;\n"
                   "    return length(max(q, 0.0)) + min(max(q.x, max(q.y, q.z)), 0.0);\n"
                   "}\n";
        case PrimitiveKind::BoxFrame:
            return "float sdBoxFrame(float3 p, float3 b, float e)\n"
                   "{\n"
                   "    p = abs(p) - b;\n"
                   "    float3 q = abs(p + e) - e;\n"
                   "    return min(min(\n"
                   "        length(max(float3(p.x, q.y, q.z), 0.0)) + min(max(p.x, max(q.y, q.z)), 0.0),\n"
                   "        length(max(float3(q.x, p.y, q.z), 0.0)) + min(max(q.x, max(p.y, q.z)), 0.0)),\n"
                   "        length(max(float3(q.x, q.y, p.z), 0.0)) + min(max(q.x, max(q.y, p.z)), 0.0));\n"
                   "}\n";
        case PrimitiveKind::Torus:
            return "float sdTorus(float3 p, float major, float minor)\n"
                   "{\n"
                   "    float2 q = float2(length(p.xz) - major, p.y);\n"
                   "    return length(q) - minor;\n"
                   "}\n";
        case PrimitiveKind::Plane:
            return "float sdPlane(float3 p, float3 n, float h) { return dot(p, n) + h; }\n";
        case PrimitiveKind::Cylinder:
            return "float sdCylinder(float3 p, float r, float h)\n"
                   "{\n"
                   "    float2 d = abs(float2(length(p.xz), p.y)) - float2(r, h);\n"
                   "    return min(max(d.x, d.y), 0.0) + length(max(d, 0.0));\n"
                   "}\n";
        case PrimitiveKind::Capsule:
            return "float sdCapsule(float3 p, float3 a, float3 b, float r)\n"
                   "{\n"
                   "    float3 pa = p - a, ba = b - a;\n"
                   "    float h = clamp(dot(pa, ba) / dot(ba, ba), 0.0, 1.0);\n"
                   "    return length(pa - ba * h) - r;\n"
                   "}\n";
        case PrimitiveKind::Octahedron:
            return "float sdOctahedron(float3 p, float s)\n"
                   "{\n"
                   "    p = abs(p);\n"
                   "    float m = p.x + p.y + p.z - s;\n"
                   "    float3 q;\n"
                   "    if (3.0 * p.x < m) q = p.xyz;\n"
                   "    else if (3.0 * p.y < m) q = p.yzx;\n"
                   "    else if (3.0 * p.z < m) q = p.zxy;\n"
                   "    else return m * 0.57735027;\n"
                   "    float k = clamp(0.5 * (q.z - q.y + s), 0.0, s);\n"
                   "    return length(float3(q.x, q.y - s + k, q.z - k));\n"
                   "}\n";
        case PrimitiveKind::HexPrism:
            return "float sdHexPrism(float3 p, float r, float h)\n"
                   "{\n"
                   "    const float3 k = float3(-0.8660254, 0.5, 0.57735);\n"
                   "    p = abs(p);\n"
                   "    p.xy -= 2.0 * min(dot(k.xy, p.xy), 0.0) * k.xy;\n"
                   "    float2 d = float2(length(p.xy - float2(clamp(p.x, -k.z * r, k.z * r), r)) * sign(p.y - r),\n"
                   "                      p.z - h);\n"
                   "    return min(max(d.x, d.y), 0.0) + length(max(d, 0.0));\n"
                   "}\n";
        case PrimitiveKind::RoundCone:
            return "float sdRoundCone(float3 p, float r1, float r2, float h)\n"
                   "{\n"
                   "    float2 q = float2(length(p.xz), p.y);\n"
                   "    float b = (r1 - r2) / h;\n"
                   "    float a = sqrt(1.0 - b * b);\n"
                   "    float k = dot(q, float2(-b, a));\n"
                   "    if (k < 0.0) return length(q) - r1;\n"
                   "    if (k > a * h) return length(q - float2(0.0, h)) - r2;\n"
                   "    return dot(q, float2(a, b)) - r1;\n"
                   "}\n";
    }
    return "";
}

constexpr std::string_view kPrelude =
    "float3 RotateQ(float4 q, float3 v)\n"
    "{\n"
    "    float3 t = 2.0 * cross(q.yzw, v);\n"
    "    return v + q.x * t + cross(q.yzw, t);\n"
    "}\n"
    "\n"
    "float NodeScale(int base) { return length(float4(P[base + 3], P[base + 4], P[base + 5], P[base + 6])); }\n"
    "\n"
    "float3 ToLocal(float3 pos, int base)\n"
    "{\n"
    "    float s = NodeScale(base);\n"
    "    float4 q = float4(P[base + 3], -P[base + 4], -P[base + 5], -P[base + 6]) / s;\n"
    "    return RotateQ(q, pos - float3(P[base + 0], P[base + 1], P[base + 2])) / s;\n"
    "}\n"
    "\n"
    "float3 PlaneFold(float3 p, float3 n) { return p - 2.0 * min(0.0, dot(p, n)) * n; }\n"
    "float3 MirrorFold(float3 p, int axis) { p[axis] = abs(p[axis]); return p; }\n"
    "float3 DomainRepeat(float3 p, float3 c) { return (p + 0.5 * c) - c * floor((p + 0.5 * c) / c) - 0.5 * c; }\n"
    "\n"
    "float SmoothMin(float a, float b, float k)\n"
    "{\n"
    "    float h = max(k - abs(a - b), 0.0) / k;\n"
    "    return min(a, b) - h * h * k * 0.25;\n"
    "}\n"
    "float SmoothMax(float a, float b, float k) { return -SmoothMin(-a, -b, k); }\n"
    "\n"
    "// float2: x = distance, y = material id of the governing primitive\n"
    "float2 opUnion(float2 a, float2 b, float k) { return b.x < a.x ? b : a; }\n"
    "float2 opSubtract(float2 a, float2 b, float k) { return -b.x > a.x ? float2(-b.x, b.y) : a; }\n"
    "float2 opIntersect(float2 a, float2 b, float k) { return b.x > a.x ? b : a; }\n"
    "float2 opSmoothUnion(float2 a, float2 b, float k) { return float2(SmoothMin(a.x, b.x, k), b.x < a.x ? b.y : a.y); }\n"
    "float2 opSmoothSubtract(float2 a, float2 b, float k) { return float2(SmoothMax(a.x, -b.x, k), -b.x > a.x ? b.y : a.y); }\n"
    "float2 opSmoothIntersect(float2 a, float2 b, float k) { return float2(SmoothMax(a.x, b.x, k), b.x > a.x ? b.y : a.y); }\n";

std::string param(size_t base, int index) { return "P[" + std::to_string(base + slot::kParams + index) + "]"; }

std::string param3(size_t base, int first) {
    return "float3(" + param(base, first) + ", " + param(base, first + 1) + ", " + param(base, first + 2) + ")";
}

std::string primitive_call(const PrimitiveParams& prim, size_t base) {
    std::string args;
    switch (prim.kind) {
        case PrimitiveKind::Box:
            args = param3(base, 0);
            break;
        case PrimitiveKind::BoxFrame:
        case PrimitiveKind::Plane:
            args = param3(base, 0) + ", " + param(base, 3);
            break;
        case PrimitiveKind::Capsule:
            args = param3(base, 0) + ", " + param3(base, 3) + ", " + param(base, 6);
            break;
        default:
            for (int i = 0; i < arity(prim.kind); ++i) args += (i ? ", " : "") + param(base, i);
            break;
    }
    return std::string(primitive_function(prim.kind)) + "(q, " + args + ")";
}

std::string space_modifier(const Modifier& m) {
    if (const auto* f = std::get_if<mod::PlaneFold>(&m)) return "q = PlaneFold(q, " + lit(f->normal) + ");";
    if (const auto* f = std::get_if<mod::MirrorFold>(&m)) {
        return "q = MirrorFold(q, " + std::to_string(static_cast<int>(f->axis)) + ");";
    }
    return "q = DomainRepeat(q, " + lit(std::get<mod::DomainRepeat>(m).cell) + ");";
}

std::string distance_modifier(const Modifier& m) {
    if (const auto* r = std::get_if<mod::Round>(&m)) return "d = d - " + lit(r->radius) + ";";
    return "d = abs(d) - " + lit(std::get<mod::Onion>(m).thickness) + ";";
}

struct Emitter {
    std::ostringstream body;
    std::set<PrimitiveKind> kinds;
    size_t instruction = 0;
    int max_register = 0;

    // Pre-order call per node; operator applied when each child subtree returns.
    void node(const SceneNode& n, int reg) {
        if (reg + 1 > kMaxTreeDepth) {
            throw CompileError(CompileError::Kind::TreeTooDeep, "tree depth exceeds " + std::to_string(kMaxTreeDepth));
        }
        max_register = std::max(max_register, reg);
        kinds.insert(n.primitive.kind);
        const size_t base = 16 * instruction++;
        body << "    // node " << n.id << ": " << to_string(n.primitive.kind) << "\n";
        body << "    q = ToLocal(pos, " << base << ");\n";
        for (const auto& m : n.modifiers) {
            if (is_space_modifier(m)) body << "    " << space_modifier(m) << "\n";
        }
        body << "    d = " << primitive_call(n.primitive, base) << ";\n";
        for (const auto& m : n.modifiers) {
            if (!is_space_modifier(m)) body << "    " << distance_modifier(m) << "\n";
        }
        body << "    r" << reg << " = float2(d * NodeScale(" << base << "), P[" << base + slot::kMaterial << "]);\n";
        for (const auto& child : n.children) {
            node(child, reg + 1);
            const size_t op_base = 16 * instruction++;
            body << "    r" << reg << " = " << operator_function(child.combine.kind) << "(r" << reg << ", r" << reg + 1
                 << ", P[" << op_base + slot::kSmoothing << "]);\n";
        }
    }
};

void emit_ifs(std::ostream& out, const IfsSequence& ifs) {
    if (ifs.empty()) return;
    out << "    for (int it = 0; it < " << ifs.iterations << "; ++it)\n    {\n";
    for (const auto& step : ifs.steps) {
        out << "        ";
        if (const auto* f = std::get_if<mod::PlaneFold>(&step)) {
            out << "pos = PlaneFold(pos, " << lit(f->normal) << ");\n";
        } else if (const auto* f = std::get_if<mod::MirrorFold>(&step)) {
            out << "pos = MirrorFold(pos, " << static_cast<int>(f->axis) << ");\n";
        } else if (const auto* r = std::get_if<ifs::Rotate>(&step)) {
            const Quat& q = r->rotation;
            out << "pos = RotateQ(float4(" << lit(q.w) << ", " << lit(q.x) << ", " << lit(q.y) << ", " << lit(q.z)
                << "), pos);\n";
        } else {
            const auto& s = std::get<ifs::Scale>(step);
            out << "pos = pos * " << lit(s.factor) << " - " << lit(s.offset) << " * " << lit(s.factor - 1.0)
                << ";\n        ifsScale *= " << lit(s.factor) << ";\n";
        }
    }
    out << "    }\n";
}

}  // namespace

std::string emit_shader_source(const SceneTree& tree) {
    Emitter e;
    if (tree.root) e.node(*tree.root, 0);

    std::ostringstream out;
    out << "// Generated scene map function: " << e.instruction << " instructions.\n"
        << "// P mirrors the instruction buffer, 16 floats per instruction:\n"
        << "//   [0..2] translation, [3..6] rotation quaternion * scale, [7..13] arguments, [14] material.\n"
        << "StructuredBuffer<float> P;\n\n"
        << kPrelude << "\n";
    for (PrimitiveKind k : e.kinds) out << primitive_source(k) << "\n";

    out << "float2 Map(float3 pos)\n{\n";
    if (!tree.root) {
        out << "    return float2(1.0e30, -1.0);\n}\n";
        return out.str();
    }
    out << "    float ifsScale = 1.0;\n";
    emit_ifs(out, tree.ifs);
    out << "    float3 q;\n    float d;\n    float2 ";
    for (int r = 0; r <= e.max_register; ++r) out << (r ? ", r" : "r") << r;
    out << ";\n\n" << e.body.str() << "\n    r0.x /= ifsScale;\n    return r0;\n}\n";
    return out.str();
}

}  // namespace ff
