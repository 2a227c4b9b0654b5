#pragma once

// Flattens a SceneTree into a postfix buffer of 4x4 instruction matrices and
// interprets that buffer point-wise. The buffer is what the renderer marches.
//
// Instruction layout (16 reals, row-major 4x4):
//   0-2   node translation
//   3-6   node rotation quaternion (w, x, y, z) multiplied by the node's uniform
//         scale; the quaternion norm recovers the scale
//   7-13  primitive parameters, zero padded past the kind's arity
//         (operator instructions: slot 7 holds the smoothing radius k)
//   14    material id
//   15    opcode: +kind tag pushes a primitive, -operator tag pops two
//         entries and pushes their combination
// Modifiers and the root IFS sequence travel beside the matrices.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fractalforge/scene.hpp"

namespace ff {

using InstructionMatrix = std::array<double, 16>;

namespace slot {
inline constexpr int kTranslation = 0;
inline constexpr int kRotation = 3;
inline constexpr int kParams = 7;
inline constexpr int kSmoothing = 7;
inline constexpr int kMaterial = 14;
inline constexpr int kOpcode = 15;
}  // namespace slot

inline constexpr int kValueStackCapacity = 32;

struct ModifierRange {
    uint32_t begin = 0;
    uint32_t count = 0;
    friend bool operator==(const ModifierRange&, const ModifierRange&) = default;
};

struct InstructionBuffer {
    std::vector<InstructionMatrix> instructions;
    /// node id -> instruction position, for recompilation-free updates
    std::map<int, size_t> node_index;
    /// One range per instruction into `modifiers`; operator instructions have empty ranges.
    std::vector<ModifierRange> modifier_ranges;
    std::vector<Modifier> modifiers;
    IfsSequence ifs;

    size_t size() const { return instructions.size(); }
    friend bool operator==(const InstructionBuffer&, const InstructionBuffer&) = default;
};

class CompileError : public std::runtime_error {
public:
    enum class Kind { TreeTooDeep, TooManyNodes };
    CompileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class MalformedBuffer : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KindChangeRequiresRecompile : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

InstructionBuffer compile(const SceneTree& tree);

/// Evaluates the flattened scene at p. Throws MalformedBuffer on stack underflow or
/// overflow, an unknown opcode, or a final stack depth other than one.
Sample interpret(const InstructionBuffer& buffer, const Vec3& p);

/// Structural check without evaluating anything.
void verify_postfix(const InstructionBuffer& buffer);

/// Rewrites slots 7-13 of one instruction. Throws UnknownNodeId or KindChangeRequiresRecompile.
void update_params(InstructionBuffer& buffer, int node_id, const PrimitiveParams& params);
/// Rewrites slots 0-6 of one instruction.
void update_transform(InstructionBuffer& buffer, int node_id, const Transform& transform);

/// Deterministic HLSL-flavoured source for the scene's map function. Primitive
/// arguments and transforms are read from a flat float array laid out exactly
/// like the instruction buffer (16 floats per instruction).
std::string emit_shader_source(const SceneTree& tree);

/// Length-prefixed little-endian dump: u64 instruction count, 16 f64 per
/// instruction, then a u64-prefixed f64 side table holding node ids, modifiers and the IFS.
std::string dump_buffer(const InstructionBuffer& buffer);
/// Throws MalformedBuffer on truncated or inconsistent input.
InstructionBuffer restore_buffer(std::string_view bytes);

}  // namespace ff
