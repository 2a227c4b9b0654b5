#pragma once

// Point-wise signed distance mathematics: primitives, CSG combine operators,
// per-primitive modifiers, space folds and the root IFS iteration.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fractalforge/vec.hpp"

namespace ff {

/// Primitive tags double as positive opcodes in the instruction buffer.
enum class PrimitiveKind : int {
    Sphere = 1,
    Box = 2,
    BoxFrame = 3,
    Torus = 4,
    Plane = 5,
    Cylinder = 6,
    Capsule = 7,
    Octahedron = 8,
    HexPrism = 9,
    RoundCone = 10,
};

inline constexpr int kPrimitiveKindCount = 10;
inline constexpr int kMaxPrimitiveArity = 7;

int arity(PrimitiveKind kind);
std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> primitive_kind_from_string(std::string_view name);
std::optional<PrimitiveKind> primitive_kind_from_tag(int tag);
/// Names of each parameter slot, in order ("r", "bx", ...).
std::span<const std::string_view> parameter_names(PrimitiveKind kind);

struct PrimitiveParams {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    std::array<double, kMaxPrimitiveArity> values{};

    static PrimitiveParams sphere(double r);
    static PrimitiveParams box(const Vec3& half_extents);
    static PrimitiveParams box_frame(const Vec3& half_extents, double edge);
    static PrimitiveParams torus(double major, double minor);
    static PrimitiveParams plane(const Vec3& unit_normal, double offset);
    static PrimitiveParams cylinder(double radius, double half_height);
    static PrimitiveParams capsule(const Vec3& a, const Vec3& b, double r);
    static PrimitiveParams octahedron(double s);
    static PrimitiveParams hex_prism(double radius, double half_length);
    static PrimitiveParams round_cone(double r1, double r2, double height);

    /// Builds params from a value list; fails (nullopt) when the count does not match the arity.
    static std::optional<PrimitiveParams> from_values(PrimitiveKind kind, std::span<const double> values);
    std::span<const double> active() const { return {values.data(), static_cast<size_t>(arity(kind))}; }

    friend bool operator==(const PrimitiveParams&, const PrimitiveParams&) = default;
};

/// Empty when the parameters satisfy the kind's constraints, otherwise a short reason.
std::optional<std::string> check_params(const PrimitiveParams& params);

double evaluate_primitive(const PrimitiveParams& params, const Vec3& p);

// Polynomial smooth min/max with blend radius k.
double smooth_min(double a, double b, double k);
double smooth_max(double a, double b, double k);

struct CombineOp {
    /// Tags are the magnitudes of the negative opcodes in the instruction buffer.
    enum class Kind : int {
        Union = 1,
        Subtract = 2,
        Intersect = 3,
        SmoothUnion = 4,
        SmoothSubtract = 5,
        SmoothIntersect = 6,
    };

    Kind kind = Kind::Union;
    double k = 0.0;  // smoothing radius, smooth kinds only

    bool is_smooth() const { return kind >= Kind::SmoothUnion; }

    static CombineOp union_op() { return {Kind::Union, 0.0}; }
    static CombineOp subtract() { return {Kind::Subtract, 0.0}; }
    static CombineOp intersect() { return {Kind::Intersect, 0.0}; }
    static CombineOp smooth_union(double k) { return {Kind::SmoothUnion, k}; }
    static CombineOp smooth_subtract(double k) { return {Kind::SmoothSubtract, k}; }
    static CombineOp smooth_intersect(double k) { return {Kind::SmoothIntersect, k}; }

    friend bool operator==(const CombineOp&, const CombineOp&) = default;
};

inline constexpr int kCombineKindCount = 6;

std::string_view to_string(CombineOp::Kind kind);
std::optional<CombineOp::Kind> combine_kind_from_string(std::string_view name);
std::optional<CombineOp::Kind> combine_kind_from_tag(int tag);

/// Combines a parent distance with a child distance. Subtract removes the child from the parent.
double apply_combine(const CombineOp& op, double parent_d, double child_d);

/// Distance paired with the material of the primitive that governs it.
struct Sample {
    double distance = 0.0;
    int material = 0;
};

/// apply_combine plus nearest-wins material attribution (smooth kinds do not blend materials).
Sample combine_samples(const CombineOp& op, const Sample& parent, const Sample& child);

enum class Axis : int { X = 0, Y = 1, Z = 2 };
std::string_view to_string(Axis axis);
std::optional<Axis> axis_from_string(std::string_view name);

namespace mod {
struct Round {
    double radius = 0.0;
    friend bool operator==(const Round&, const Round&) = default;
};
struct Onion {
    double thickness = 0.0;
    friend bool operator==(const Onion&, const Onion&) = default;
};
/// Reflects points into the half-space on the positive side of the plane through the origin.
struct PlaneFold {
    Vec3 normal{1.0, 0.0, 0.0};
    friend bool operator==(const PlaneFold&, const PlaneFold&) = default;
};
struct MirrorFold {
    Axis axis = Axis::X;
    friend bool operator==(const MirrorFold&, const MirrorFold&) = default;
};
struct DomainRepeat {
    Vec3 cell{1.0, 1.0, 1.0};
    friend bool operator==(const DomainRepeat&, const DomainRepeat&) = default;
};
}  // namespace mod

using Modifier = std::variant<mod::Round, mod::Onion, mod::PlaneFold, mod::MirrorFold, mod::DomainRepeat>;

bool is_space_modifier(const Modifier& m);
std::optional<std::string> check_modifier(const Modifier& m);
/// Space modifiers map the query point; distance modifiers return p unchanged.
Vec3 apply_modifier(const Modifier& m, const Vec3& p);
/// Distance modifiers adjust d; space modifiers return d unchanged.
double adjust_distance(const Modifier& m, double d);

Vec3 plane_fold(const Vec3& p, const Vec3& unit_normal);
Vec3 mirror_fold(const Vec3& p, Axis axis);

namespace ifs {
struct Rotate {
    Quat rotation;
    friend bool operator==(const Rotate&, const Rotate&) = default;
};
/// p <- p*s - offset*(s-1)
struct Scale {
    double factor = 2.0;
    Vec3 offset;
    friend bool operator==(const Scale&, const Scale&) = default;
};
}  // namespace ifs

using IfsStep = std::variant<mod::PlaneFold, mod::MirrorFold, ifs::Rotate, ifs::Scale>;

struct IfsSequence {
    std::vector<IfsStep> steps;
    int iterations = 0;

    bool empty() const { return iterations == 0 || steps.empty(); }
    friend bool operator==(const IfsSequence&, const IfsSequence&) = default;
};

std::optional<std::string> check_ifs_step(const IfsStep& step);

struct IfsResult {
    Vec3 p;
    double scale = 1.0;  // divide the tile distance by this
};

IfsResult apply_ifs(const IfsSequence& seq, const Vec3& p);

}  // namespace ff
