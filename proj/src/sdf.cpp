#include "fractalforge/sdf.hpp"

#include <cassert>
#include <cmath>

namespace ff {

namespace {

struct KindInfo {
    PrimitiveKind kind;
    std::string_view name;
    std::array<std::string_view, kMaxPrimitiveArity> params;
    int arity;
};

constexpr std::array<KindInfo, kPrimitiveKindCount> kKinds{{
    {PrimitiveKind::Sphere, "sphere", {"r"}, 1},
    {PrimitiveKind::Box, "box", {"bx", "by", "bz"}, 3},
    {PrimitiveKind::BoxFrame, "box_frame", {"bx", "by", "bz", "e"}, 4},
    {PrimitiveKind::Torus, "torus", {"major", "minor"}, 2},
    {PrimitiveKind::Plane, "plane", {"nx", "ny", "nz", "h"}, 4},
    {PrimitiveKind::Cylinder, "cylinder", {"r", "h"}, 2},
    {PrimitiveKind::Capsule, "capsule", {"ax", "ay", "az", "bx", "by", "bz", "r"}, 7},
    {PrimitiveKind::Octahedron, "octahedron", {"s"}, 1},
    {PrimitiveKind::HexPrism, "hex_prism", {"r", "h"}, 2},
    {PrimitiveKind::RoundCone, "round_cone", {"r1", "r2", "h"}, 3},
}};

const KindInfo& info(PrimitiveKind kind) { return kKinds[static_cast<size_t>(kind) - 1]; }

constexpr std::array<std::string_view, kCombineKindCount> kCombineNames{
    "union", "subtract", "intersect", "smooth_union", "smooth_subtract", "smooth_intersect"};

Vec3 vec(const std::array<double, kMaxPrimitiveArity>& v, int at) { return {v[at], v[at + 1], v[at + 2]}; }

double length2(double a, double b) { return std::sqrt(a * a + b * b); }

// GLSL sign(): zero maps to zero.
double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double sd_box(const Vec3& p, const Vec3& b) {
    const Vec3 q = abs(p) - b;
    return length(max(q, 0.0)) + std::min(max_component(q), 0.0);
}

double sd_box_frame(Vec3 p, const Vec3& b, double e) {
    p = abs(p) - b;
    const Vec3 q = abs(p + Vec3{e, e, e}) - Vec3{e, e, e};
    const auto bar = [](const Vec3& v) { return length(max(v, 0.0)) + std::min(max_component(v), 0.0); };
    return std::min(std::min(bar({p.x, q.y, q.z}), bar({q.x, p.y, q.z})), bar({q.x, q.y, p.z}));
}

double sd_torus(const Vec3& p, double major, double minor) {
    return length2(length2(p.x, p.z) - major, p.y) - minor;
}

double sd_cylinder(const Vec3& p, double r, double h) {
    const double dx = std::abs(length2(p.x, p.z)) - r;
    const double dy = std::abs(p.y) - h;
    return std::min(std::max(dx, dy), 0.0) + length2(std::max(dx, 0.0), std::max(dy, 0.0));
}

double sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
    const Vec3 pa = p - a;
    const Vec3 ba = b - a;
    const double bb = dot(ba, ba);
    const double h = bb > 0.0 ? std::clamp(dot(pa, ba) / bb, 0.0, 1.0) : 0.0;
    return length(pa - ba * h) - r;
}

double sd_octahedron(Vec3 p, double s) {
    p = abs(p);
    const double m = p.x + p.y + p.z - s;
    Vec3 q;
    if (3.0 * p.x < m) {
        q = p;
    } else if (3.0 * p.y < m) {
        q = {p.y, p.z, p.x};
    } else if (3.0 * p.z < m) {
        q = {p.z, p.x, p.y};
    } else {
        return m * 0.57735026918962576;
    }
    const double k = std::clamp(0.5 * (q.z - q.y + s), 0.0, s);
    return length(Vec3{q.x, q.y - s + k, q.z - k});
}

double sd_hex_prism(Vec3 p, double r, double half_length) {
    constexpr double kx = -0.86602540378443865;
    constexpr double ky = 0.5;
    constexpr double kz = 0.57735026918962576;
    p = abs(p);
    const double fold = 2.0 * std::min(kx * p.x + ky * p.y, 0.0);
    p.x -= fold * kx;
    p.y -= fold * ky;
    const double cx = std::clamp(p.x, -kz * r, kz * r);
    const double dx = length2(p.x - cx, p.y - r) * sign(p.y - r);
    const double dy = p.z - half_length;
    return std::min(std::max(dx, dy), 0.0) + length2(std::max(dx, 0.0), std::max(dy, 0.0));
}

double sd_round_cone(const Vec3& p, double r1, double r2, double h) {
    const double qx = length2(p.x, p.z);
    const double qy = p.y;
    const double b = (r1 - r2) / h;
    const double a = std::sqrt(1.0 - b * b);
    const double k = -b * qx + a * qy;
    if (k < 0.0) return length2(qx, qy) - r1;
    if (k > a * h) return length2(qx, qy - h) - r2;
    return qx * a + qy * b - r1;
}

}  // namespace

int arity(PrimitiveKind kind) { return info(kind).arity; }

std::string_view to_string(PrimitiveKind kind) { return info(kind).name; }

std::optional<PrimitiveKind> primitive_kind_from_string(std::string_view name) {
    for (const auto& k : kKinds) {
        if (k.name == name) return k.kind;
    }
    return std::nullopt;
}

std::optional<PrimitiveKind> primitive_kind_from_tag(int tag) {
    if (tag < 1 || tag > kPrimitiveKindCount) return std::nullopt;
    return static_cast<PrimitiveKind>(tag);
}

std::span<const std::string_view> parameter_names(PrimitiveKind kind) {
    const auto& k = info(kind);
    return {k.params.data(), static_cast<size_t>(k.arity)};
}

PrimitiveParams PrimitiveParams::sphere(double r) { return {PrimitiveKind::Sphere, {r}}; }
PrimitiveParams PrimitiveParams::box(const Vec3& b) { return {PrimitiveKind::Box, {b.x, b.y, b.z}}; }
PrimitiveParams PrimitiveParams::box_frame(const Vec3& b, double e) {
    return {PrimitiveKind::BoxFrame, {b.x, b.y, b.z, e}};
}
PrimitiveParams PrimitiveParams::torus(double major, double minor) { return {PrimitiveKind::Torus, {major, minor}}; }
PrimitiveParams PrimitiveParams::plane(const Vec3& n, double offset) {
    return {PrimitiveKind::Plane, {n.x, n.y, n.z, offset}};
}
PrimitiveParams PrimitiveParams::cylinder(double radius, double half_height) {
    return {PrimitiveKind::Cylinder, {radius, half_height}};
}
PrimitiveParams PrimitiveParams::capsule(const Vec3& a, const Vec3& b, double r) {
    return {PrimitiveKind::Capsule, {a.x, a.y, a.z, b.x, b.y, b.z, r}};
}
PrimitiveParams PrimitiveParams::octahedron(double s) { return {PrimitiveKind::Octahedron, {s}}; }
PrimitiveParams PrimitiveParams::hex_prism(double radius, double half_length) {
    return {PrimitiveKind::HexPrism, {radius, half_length}};
}
PrimitiveParams PrimitiveParams::round_cone(double r1, double r2, double height) {
    return {PrimitiveKind::RoundCone, {r1, r2, height}};
}

std::optional<PrimitiveParams> PrimitiveParams::from_values(PrimitiveKind kind, std::span<const double> values) {
    if (static_cast<int>(values.size()) != arity(kind)) return std::nullopt;
    PrimitiveParams out{kind, {}};
    std::copy(values.begin(), values.end(), out.values.begin());
    return out;
}

std::optional<std::string> check_params(const PrimitiveParams& params) {
    const auto& v = params.values;
    for (int i = 0; i < kMaxPrimitiveArity; ++i) {
        if (!std::isfinite(v[i])) return "non-finite parameter";
        if (i >= arity(params.kind) && v[i] != 0.0) return "padding slot is not zero";
    }
    const auto positive = [&](std::initializer_list<int> slots) -> std::optional<std::string> {
        for (int s : slots) {
            if (!(v[s] > 0.0)) {
                return std::string("parameter '") + std::string(parameter_names(params.kind)[s]) + "' must be > 0";
            }
        }
        return std::nullopt;
    };
    switch (params.kind) {
        case PrimitiveKind::Sphere:
        case PrimitiveKind::Octahedron:
            return positive({0});
        case PrimitiveKind::Box:
            return positive({0, 1, 2});
        case PrimitiveKind::BoxFrame:
            if (auto e = positive({0, 1, 2, 3})) return e;
            if (v[3] > std::min(v[0], std::min(v[1], v[2]))) return "edge thickness exceeds half-extent";
            return std::nullopt;
        case PrimitiveKind::Torus:
        case PrimitiveKind::Cylinder:
        case PrimitiveKind::HexPrism:
            return positive({0, 1});
        case PrimitiveKind::Plane:
            if (std::abs(length(vec(v, 0)) - 1.0) > 1e-9) return "plane normal must be unit length";
            return std::nullopt;
        case PrimitiveKind::Capsule:
            return positive({6});
        case PrimitiveKind::RoundCone:
            if (auto e = positive({0, 1, 2})) return e;
            if (std::abs(v[0] - v[1]) >= v[2]) return "radius difference must be smaller than height";
            return std::nullopt;
    }
    return "unknown primitive kind";
}

double evaluate_primitive(const PrimitiveParams& params, const Vec3& p) {
    const auto& v = params.values;
    switch (params.kind) {
        case PrimitiveKind::Sphere:
            return length(p) - v[0];
        case PrimitiveKind::Box:
            return sd_box(p, vec(v, 0));
        case PrimitiveKind::BoxFrame:
            return sd_box_frame(p, vec(v, 0), v[3]);
        case PrimitiveKind::Torus:
            return sd_torus(p, v[0], v[1]);
        case PrimitiveKind::Plane:
            return dot(p, vec(v, 0)) + v[3];
        case PrimitiveKind::Cylinder:
            return sd_cylinder(p, v[0], v[1]);
        case PrimitiveKind::Capsule:
            return sd_capsule(p, vec(v, 0), vec(v, 3), v[6]);
        case PrimitiveKind::Octahedron:
            return sd_octahedron(p, v[0]);
        case PrimitiveKind::HexPrism:
            return sd_hex_prism(p, v[0], v[1]);
        case PrimitiveKind::RoundCone:
            return sd_round_cone(p, v[0], v[1], v[2]);
    }
    assert(false && "unknown primitive kind");
    return 0.0;
}

double smooth_min(double a, double b, double k) {
    const double h = std::max(k - std::abs(a - b), 0.0) / k;
    return std::min(a, b) - h * h * k * 0.25;
}

double smooth_max(double a, double b, double k) { return -smooth_min(-a, -b, k); }

std::string_view to_string(CombineOp::Kind kind) { return kCombineNames[static_cast<size_t>(kind) - 1]; }

std::optional<CombineOp::Kind> combine_kind_from_string(std::string_view name) {
    for (size_t i = 0; i < kCombineNames.size(); ++i) {
        if (kCombineNames[i] == name) return static_cast<CombineOp::Kind>(i + 1);
    }
    return std::nullopt;
}

std::optional<CombineOp::Kind> combine_kind_from_tag(int tag) {
    if (tag < 1 || tag > kCombineKindCount) return std::nullopt;
    return static_cast<CombineOp::Kind>(tag);
}

double apply_combine(const CombineOp& op, double parent_d, double child_d) {
    switch (op.kind) {
        case CombineOp::Kind::Union:
            return std::min(parent_d, child_d);
        case CombineOp::Kind::Subtract:
            return std::max(parent_d, -child_d);
        case CombineOp::Kind::Intersect:
            return std::max(parent_d, child_d);
        case CombineOp::Kind::SmoothUnion:
            return smooth_min(parent_d, child_d, op.k);
        case CombineOp::Kind::SmoothSubtract:
            return smooth_max(parent_d, -child_d, op.k);
        case CombineOp::Kind::SmoothIntersect:
            return smooth_max(parent_d, child_d, op.k);
    }
    return parent_d;
}

Sample combine_samples(const CombineOp& op, const Sample& parent, const Sample& child) {
    bool child_governs = false;
    switch (op.kind) {
        case CombineOp::Kind::Union:
        case CombineOp::Kind::SmoothUnion:
            child_governs = child.distance < parent.distance;
            break;
        case CombineOp::Kind::Subtract:
        case CombineOp::Kind::SmoothSubtract:
            child_governs = -child.distance > parent.distance;
            break;
        case CombineOp::Kind::Intersect:
        case CombineOp::Kind::SmoothIntersect:
            child_governs = child.distance > parent.distance;
            break;
    }
    return {apply_combine(op, parent.distance, child.distance), child_governs ? child.material : parent.material};
}

std::string_view to_string(Axis axis) {
    constexpr std::array<std::string_view, 3> names{"x", "y", "z"};
    return names[static_cast<size_t>(axis)];
}

std::optional<Axis> axis_from_string(std::string_view name) {
    if (name == "x") return Axis::X;
    if (name == "y") return Axis::Y;
    if (name == "z") return Axis::Z;
    return std::nullopt;
}

Vec3 plane_fold(const Vec3& p, const Vec3& n) { return p - (2.0 * std::min(0.0, dot(p, n))) * n; }

Vec3 mirror_fold(const Vec3& p, Axis axis) {
    Vec3 out = p;
    out[static_cast<int>(axis)] = std::abs(out[static_cast<int>(axis)]);
    return out;
}

namespace {
double floor_mod(double a, double m) { return a - m * std::floor(a / m); }

std::optional<std::string> check_fold_normal(const Vec3& n) {
    if (!is_finite(n) || std::abs(length(n) - 1.0) > 1e-9) return "fold normal must be unit length";
    return std::nullopt;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
}  // namespace

bool is_space_modifier(const Modifier& m) {
    return !std::holds_alternative<mod::Round>(m) && !std::holds_alternative<mod::Onion>(m);
}

std::optional<std::string> check_modifier(const Modifier& m) {
    return std::visit(
        overloaded{
            [](const mod::Round& r) -> std::optional<std::string> {
                if (!std::isfinite(r.radius) || r.radius < 0.0) return "round radius must be >= 0";
                return std::nullopt;
            },
            [](const mod::Onion& o) -> std::optional<std::string> {
                if (!(o.thickness > 0.0) || !std::isfinite(o.thickness)) return "onion thickness must be > 0";
                return std::nullopt;
            },
            [](const mod::PlaneFold& f) { return check_fold_normal(f.normal); },
            [](const mod::MirrorFold&) -> std::optional<std::string> { return std::nullopt; },
            [](const mod::DomainRepeat& r) -> std::optional<std::string> {
                if (!is_finite(r.cell) || !(r.cell.x > 0.0 && r.cell.y > 0.0 && r.cell.z > 0.0)) {
                    return "repeat cell extents must be > 0";
                }
                return std::nullopt;
            },
        },
        m);
}

Vec3 apply_modifier(const Modifier& m, const Vec3& p) {
    switch (m.index()) {
        case 2:
            return plane_fold(p, std::get<mod::PlaneFold>(m).normal);
        case 3:
            return mirror_fold(p, std::get<mod::MirrorFold>(m).axis);
        case 4: {
            const Vec3& c = std::get<mod::DomainRepeat>(m).cell;
            return {floor_mod(p.x + 0.5 * c.x, c.x) - 0.5 * c.x, floor_mod(p.y + 0.5 * c.y, c.y) - 0.5 * c.y,
                    floor_mod(p.z + 0.5 * c.z, c.z) - 0.5 * c.z};
        }
        default:
            return p;
    }
}

double adjust_distance(const Modifier& m, double d) {
    if (const auto* r = std::get_if<mod::Round>(&m)) return d - r->radius;
    if (const auto* o = std::get_if<mod::Onion>(&m)) return std::abs(d) - o->thickness;
    return d;
}

std::optional<std::string> check_ifs_step(const IfsStep& step) {
    return std::visit(
        overloaded{
            [](const mod::PlaneFold& f) { return check_fold_normal(f.normal); },
            [](const mod::MirrorFold&) -> std::optional<std::string> { return std::nullopt; },
            [](const ifs::Rotate& r) -> std::optional<std::string> {
                if (!std::isfinite(r.rotation.norm()) || std::abs(r.rotation.norm() - 1.0) > 1e-9) {
                    return "rotation quaternion must be normalized";
                }
                return std::nullopt;
            },
            [](const ifs::Scale& s) -> std::optional<std::string> {
                if (!(s.factor > 1.0) || !std::isfinite(s.factor)) return "ifs scale factor must be > 1";
                if (!is_finite(s.offset)) return "ifs scale offset must be finite";
                return std::nullopt;
            },
        },
        step);
}

IfsResult apply_ifs(const IfsSequence& seq, const Vec3& p) {
    IfsResult r{p, 1.0};
    for (int i = 0; i < seq.iterations; ++i) {
        for (const auto& step : seq.steps) {
            switch (step.index()) {
                case 0:
                    r.p = plane_fold(r.p, std::get<mod::PlaneFold>(step).normal);
                    break;
                case 1:
                    r.p = mirror_fold(r.p, std::get<mod::MirrorFold>(step).axis);
                    break;
                case 2:
                    r.p = rotate(std::get<ifs::Rotate>(step).rotation, r.p);
                    break;
                case 3: {
                    const auto& s = std::get<ifs::Scale>(step);
                    r.p = r.p * s.factor - s.offset * (s.factor - 1.0);
                    r.scale *= s.factor;
                    break;
                }
            }
        }
    }
    return r;
}

}  // namespace ff
