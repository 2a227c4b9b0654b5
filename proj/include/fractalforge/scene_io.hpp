#pragma once

// Scene documents: the JSON scene format (`.sdfscene.json`) and keyframe
// animation tracks. See docs/scene_format.md for the schema.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fractalforge/raymarch.hpp"
#include "fractalforge/scene.hpp"

namespace ff {

inline constexpr int kSceneFormatVersion = 1;

struct CameraSpec {
    Vec3 position{0.0, 0.0, 5.0};
    Vec3 target{0.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double fov_deg = 45.0;

    Camera to_camera(int width, int height) const;
    friend bool operator==(const CameraSpec&, const CameraSpec&) = default;
};

struct Keyframe {
    double time = 0.0;
    std::vector<double> value;
    friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

/// Linear keyframe track. Targets:
///   node/<id>/params            all primitive parameters
///   node/<id>/params/<name>     one named parameter (e.g. node/2/params/r)
///   node/<id>/position | rotation | scale
///   ifs/<index>/factor | offset | rotation | normal
///   camera/position | target | fov_deg
struct AnimationTrack {
    std::string target;
    std::vector<Keyframe> keys;
    friend bool operator==(const AnimationTrack&, const AnimationTrack&) = default;
};

struct SceneDocument {
    int version = kSceneFormatVersion;
    SceneTree tree;
    std::optional<CameraSpec> camera;
    std::vector<AnimationTrack> animation;

    friend bool operator==(const SceneDocument&, const SceneDocument&) = default;
};

class ParseError : public std::runtime_error {
public:
    enum class Kind {
        SyntaxError,
        UnknownShape,
        ArityMismatch,
        UnknownOperator,
        CycleOrDuplicateId,
        UnknownField,
        InvalidValue,
        InvalidTrack,
        ValidationFailed,
    };

    ParseError(Kind kind, int line, int column, const std::string& detail);

    Kind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& detail() const { return detail_; }

private:
    Kind kind_;
    int line_;
    int column_;
    std::string detail_;
};

std::string_view to_string(ParseError::Kind kind);

/// Parses and validates a scene. Strict mode rejects unknown object fields.
SceneDocument parse_scene(std::string_view text, bool strict = true);

/// Parsers for single document sections, sharing the document schema and error
/// reporting. Used by the edit protocol. A node fragment is checked for duplicate
/// ids within itself only.
SceneNode parse_node(std::string_view text, bool strict = true);
Transform parse_transform(std::string_view text, bool strict = true);
IfsSequence parse_ifs(std::string_view text, bool strict = true);
LightingConfig parse_lighting(std::string_view text, bool strict = true);
CameraSpec parse_camera(std::string_view text, bool strict = true);

/// Canonical text: sorted keys, two-space indentation, shortest round-trip number formatting.
std::string serialize_scene(const SceneDocument& doc);

struct TrackSample {
    std::string target;
    std::vector<double> value;
    friend bool operator==(const TrackSample&, const TrackSample&) = default;
};

/// Clamps before the first and after the last key, linear in between.
std::vector<TrackSample> sample_tracks(std::span<const AnimationTrack> tracks, double t);

/// Number of values a target expects; throws std::invalid_argument for unknown targets.
size_t target_arity(const SceneDocument& doc, std::string_view target);

/// Writes sampled values into a copy of the document. Rotations are renormalised.
SceneDocument apply_samples(SceneDocument doc, std::span<const TrackSample> samples);

/// The document with every track sampled at time t.
SceneDocument document_at(const SceneDocument& doc, double t);

}  // namespace ff
