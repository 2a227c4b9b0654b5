#include "fractalforge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <set>

namespace ff {

Vec3 Skybox::sample(const Vec3& d) const {
    if (type == Type::Image && image && image->width > 0 && image->height > 0) {
        const double u = 0.5 + std::atan2(d.x, -d.z) / (2.0 * std::numbers::pi);
        const double v = std::acos(std::clamp(d.y, -1.0, 1.0)) / std::numbers::pi;
        const int x = std::clamp(static_cast<int>(u * image->width), 0, image->width - 1);
        const int y = std::clamp(static_cast<int>(v * image->height), 0, image->height - 1);
        return image->pixels[static_cast<size_t>(y) * image->width + x];
    }
    const double t = std::clamp(d.y, 0.0, 1.0);
    return horizon * (1.0 - t) + zenith * t;
}

std::string_view to_string(Violation::Rule rule) {
    switch (rule) {
        case Violation::Rule::DuplicateId: return "DuplicateId";
        case Violation::Rule::NonPositiveSmoothing: return "NonPositiveSmoothing";
        case Violation::Rule::InvalidParams: return "InvalidParams";
        case Violation::Rule::InvalidTransform: return "InvalidTransform";
        case Violation::Rule::InvalidModifier: return "InvalidModifier";
        case Violation::Rule::UnknownMaterial: return "UnknownMaterial";
        case Violation::Rule::InvalidMaterial: return "InvalidMaterial";
        case Violation::Rule::InvalidIfsStep: return "InvalidIfsStep";
        case Violation::Rule::NegativeIterations: return "NegativeIterations";
        case Violation::Rule::InvalidLighting: return "InvalidLighting";
        case Violation::Rule::TreeTooDeep: return "TreeTooDeep";
        case Violation::Rule::TooManyNodes: return "TooManyNodes";
    }
    return "Unknown";
}

std::string to_string(const Violation& v) {
    std::string out(to_string(v.rule));
    if (v.node_id) out += "(" + std::to_string(*v.node_id) + ")";
    if (!v.detail.empty()) out += ": " + v.detail;
    return out;
}

namespace {

bool unit_color(const Vec3& c) { return is_finite(c) && c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x <= 1 && c.y <= 1 && c.z <= 1; }

struct Validator {
    const SceneTree& tree;
    std::vector<Violation> out;
    std::set<int> seen;
    std::set<int> reported_duplicates;
    std::set<int> material_ids;
    int count = 0;
    int max_depth = 0;

    void add(Violation::Rule rule, std::optional<int> id, std::string detail) {
        out.push_back({rule, id, std::move(detail)});
    }

    void node(const SceneNode& n, int depth, bool is_root) {
        ++count;
        max_depth = std::max(max_depth, depth);
        if (!seen.insert(n.id).second && reported_duplicates.insert(n.id).second) {
            add(Violation::Rule::DuplicateId, n.id, "");
        }
        if (auto e = check_params(n.primitive)) add(Violation::Rule::InvalidParams, n.id, *e);
        const Transform& t = n.transform;
        if (!is_finite(t.translation)) add(Violation::Rule::InvalidTransform, n.id, "non-finite translation");
        if (!std::isfinite(t.rotation.norm()) || std::abs(t.rotation.norm() - 1.0) > 1e-9) {
            add(Violation::Rule::InvalidTransform, n.id, "rotation quaternion must be normalized");
        }
        if (!(t.scale > 0.0) || !std::isfinite(t.scale)) {
            add(Violation::Rule::InvalidTransform, n.id, "scale must be > 0");
        }
        for (const auto& m : n.modifiers) {
            if (auto e = check_modifier(m)) add(Violation::Rule::InvalidModifier, n.id, *e);
        }
        if (!is_root && n.combine.is_smooth() && !(n.combine.k > 0.0 && std::isfinite(n.combine.k))) {
            add(Violation::Rule::NonPositiveSmoothing, n.id, "smoothing radius must be > 0");
        }
        if (!material_ids.contains(n.material)) {
            add(Violation::Rule::UnknownMaterial, n.id, "material " + std::to_string(n.material));
        }
        if (depth == kMaxTreeDepth && !n.children.empty()) {
            add(Violation::Rule::TreeTooDeep, n.id, "depth exceeds " + std::to_string(kMaxTreeDepth));
            return;
        }
        for (const auto& c : n.children) node(c, depth + 1, false);
    }
};

}  // namespace

std::vector<Violation> validate(const SceneTree& tree) {
    Validator v{tree, {}, {}, {}, {}};
    for (const auto& m : tree.materials) {
        if (!v.material_ids.insert(m.id).second) {
            v.add(Violation::Rule::InvalidMaterial, std::nullopt, "duplicate material id " + std::to_string(m.id));
        }
        if (!unit_color(m.albedo) || !unit_color(m.specular)) {
            v.add(Violation::Rule::InvalidMaterial, std::nullopt, "material colors must lie in [0,1]");
        }
        if (!(m.shininess > 0.0) || !std::isfinite(m.shininess)) {
            v.add(Violation::Rule::InvalidMaterial, std::nullopt, "shininess must be > 0");
        }
    }
    const LightingConfig& l = tree.lighting;
    if (!unit_color(l.ambient)) v.add(Violation::Rule::InvalidLighting, std::nullopt, "ambient must lie in [0,1]");
    if (!(l.shadow_sharpness > 0.0)) v.add(Violation::Rule::InvalidLighting, std::nullopt, "shadow sharpness must be > 0");
    for (const auto& light : l.lights) {
        if (!unit_color(light.color) || !(light.intensity >= 0.0) || !is_finite(light.vector)) {
            v.add(Violation::Rule::InvalidLighting, std::nullopt, "invalid light");
        } else if (light.type == Light::Type::Directional && std::abs(length(light.vector) - 1.0) > 1e-9) {
            v.add(Violation::Rule::InvalidLighting, std::nullopt, "light direction must be unit length");
        }
    }
    if (!unit_color(l.skybox.horizon) || !unit_color(l.skybox.zenith)) {
        v.add(Violation::Rule::InvalidLighting, std::nullopt, "skybox colors must lie in [0,1]");
    }

    if (tree.ifs.iterations < 0) v.add(Violation::Rule::NegativeIterations, std::nullopt, "");
    for (const auto& step : tree.ifs.steps) {
        if (auto e = check_ifs_step(step)) v.add(Violation::Rule::InvalidIfsStep, std::nullopt, *e);
    }
    if (tree.root) {
        v.node(*tree.root, 1, true);
        if (v.count > kMaxNodes) {
            v.add(Violation::Rule::TooManyNodes, std::nullopt, std::to_string(v.count) + " nodes");
        }
    }
    return std::move(v.out);
}

namespace {

Sample eval_node(const SceneNode& n, const Vec3& p) {
    Vec3 q = n.transform.to_local(p);
    for (const auto& m : n.modifiers) {
        if (is_space_modifier(m)) q = apply_modifier(m, q);
    }
    double d = evaluate_primitive(n.primitive, q);
    for (const auto& m : n.modifiers) {
        if (!is_space_modifier(m)) d = adjust_distance(m, d);
    }
    Sample s{d * n.transform.scale, n.material};
    for (const auto& child : n.children) s = combine_samples(child.combine, s, eval_node(child, p));
    return s;
}

template <class Node, class Fn>
Node* visit_find(Node& n, int id, Fn&& on_parent, Node* parent) {
    if (n.id == id) {
        on_parent(parent);
        return &n;
    }
    for (auto& c : n.children) {
        if (auto* hit = visit_find(c, id, on_parent, &n)) return hit;
    }
    return nullptr;
}

int count_nodes(const SceneNode& n) {
    int total = 1;
    for (const auto& c : n.children) total += count_nodes(c);
    return total;
}

int depth_of(const SceneNode& n) {
    int deepest = 0;
    for (const auto& c : n.children) deepest = std::max(deepest, depth_of(c));
    return deepest + 1;
}

}  // namespace

Sample eval_tree(const SceneTree& tree, const Vec3& p) {
    if (!tree.root) return {std::numeric_limits<double>::infinity(), -1};
    const IfsResult folded = apply_ifs(tree.ifs, p);
    Sample s = eval_node(*tree.root, folded.p);
    s.distance /= folded.scale;
    return s;
}

const SceneNode& find_node(const SceneTree& tree, int id) {
    if (tree.root) {
        if (const auto* n = visit_find(*tree.root, id, [](const SceneNode*) {}, static_cast<const SceneNode*>(nullptr))) {
            return *n;
        }
    }
    throw UnknownNodeId(id);
}

SceneNode& find_node(SceneTree& tree, int id) {
    if (tree.root) {
        if (auto* n = visit_find(*tree.root, id, [](SceneNode*) {}, static_cast<SceneNode*>(nullptr))) return *n;
    }
    throw UnknownNodeId(id);
}

const SceneNode* find_parent(const SceneTree& tree, int id) {
    if (!tree.root) throw UnknownNodeId(id);
    const SceneNode* parent = nullptr;
    if (!visit_find(*tree.root, id, [&](const SceneNode* p) { parent = p; }, static_cast<const SceneNode*>(nullptr))) {
        throw UnknownNodeId(id);
    }
    return parent;
}

SceneTree mutate_params(SceneTree tree, int id, const PrimitiveParams& params) {
    find_node(tree, id).primitive = params;
    return tree;
}

SceneTree mutate_transform(SceneTree tree, int id, const Transform& transform) {
    find_node(tree, id).transform = transform;
    return tree;
}

SceneTree add_node(SceneTree tree, int parent_id, size_t index, SceneNode node) {
    SceneNode& parent = find_node(tree, parent_id);
    index = std::min(index, parent.children.size());
    parent.children.insert(parent.children.begin() + static_cast<std::ptrdiff_t>(index), std::move(node));
    return tree;
}

SceneTree remove_node(SceneTree tree, int id) {
    const SceneNode* parent = find_parent(tree, id);
    if (!parent) throw std::invalid_argument("the root node cannot be removed");
    SceneNode& p = find_node(tree, parent->id);
    std::erase_if(p.children, [id](const SceneNode& c) { return c.id == id; });
    return tree;
}

SceneTree reorder_children(SceneTree tree, int parent_id, std::span<const size_t> permutation) {
    SceneNode& parent = find_node(tree, parent_id);
    const size_t n = parent.children.size();
    if (permutation.size() != n) throw std::invalid_argument("permutation length does not match child count");
    std::vector<bool> used(n, false);
    for (size_t i : permutation) {
        if (i >= n || used[i]) throw std::invalid_argument("not a permutation");
        used[i] = true;
    }
    std::vector<SceneNode> reordered;
    reordered.reserve(n);
    for (size_t i : permutation) reordered.push_back(std::move(parent.children[i]));
    parent.children = std::move(reordered);
    return tree;
}

int node_count(const SceneTree& tree) { return tree.root ? count_nodes(*tree.root) : 0; }

int tree_depth(const SceneTree& tree) { return tree.root ? depth_of(*tree.root) : 0; }

}  // namespace ff
