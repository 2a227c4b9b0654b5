#pragma once

// The model tree: every node holds a primitive, every edge to a parent holds
// the combine operator, and the IFS sequence wraps the whole tree at the root.
// eval_tree is the recursive reference evaluator the compiled buffer is checked
// against.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractalforge/lighting.hpp"
#include "fractalforge/sdf.hpp"

namespace ff {

inline constexpr int kMaxTreeDepth = 32;
inline constexpr int kMaxNodes = 1024;

struct Transform {
    Vec3 translation;
    Quat rotation;
    double scale = 1.0;

    /// Maps a world-space point into the node's local frame.
    Vec3 to_local(const Vec3& p) const { return rotate_inverse(rotation, p - translation) / scale; }

    friend bool operator==(const Transform&, const Transform&) = default;
};

struct SceneNode {
    int id = 0;
    PrimitiveParams primitive;
    Transform transform;
    std::vector<Modifier> modifiers;
    CombineOp combine;  // edge to the parent; ignored on the root
    int material = 0;
    std::vector<SceneNode> children;

    friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

struct SceneTree {
    std::optional<SceneNode> root;
    IfsSequence ifs;
    LightingConfig lighting;
    std::vector<Material> materials{Material{}};

    friend bool operator==(const SceneTree&, const SceneTree&) = default;
};

struct Violation {
    enum class Rule {
        DuplicateId,
        NonPositiveSmoothing,
        InvalidParams,
        InvalidTransform,
        InvalidModifier,
        UnknownMaterial,
        InvalidMaterial,
        InvalidIfsStep,
        NegativeIterations,
        InvalidLighting,
        TreeTooDeep,
        TooManyNodes,
    };

    Rule rule;
    std::optional<int> node_id;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

std::string_view to_string(Violation::Rule rule);
/// "DuplicateId(7): ..." style rendering.
std::string to_string(const Violation& v);

std::vector<Violation> validate(const SceneTree& tree);

/// Reference evaluation. An empty tree is infinitely far away with material -1.
Sample eval_tree(const SceneTree& tree, const Vec3& p);

class UnknownNodeId : public std::runtime_error {
public:
    explicit UnknownNodeId(int id) : std::runtime_error("unknown node id " + std::to_string(id)), id_(id) {}
    int id() const { return id_; }

private:
    int id_;
};

/// Throws UnknownNodeId.
const SceneNode& find_node(const SceneTree& tree, int id);
SceneNode& find_node(SceneTree& tree, int id);
const SceneNode* find_parent(const SceneTree& tree, int id);

SceneTree mutate_params(SceneTree tree, int id, const PrimitiveParams& params);
SceneTree mutate_transform(SceneTree tree, int id, const Transform& transform);

// Structural edits. They do not validate the result; callers run validate().
SceneTree add_node(SceneTree tree, int parent_id, size_t index, SceneNode node);
/// Removing the root is rejected with std::invalid_argument.
SceneTree remove_node(SceneTree tree, int id);
/// permutation[i] is the old index of the child that moves to position i.
SceneTree reorder_children(SceneTree tree, int parent_id, std::span<const size_t> permutation);

int node_count(const SceneTree& tree);
/// Root alone has depth 1; empty tree has depth 0.
int tree_depth(const SceneTree& tree);

}  // namespace ff
