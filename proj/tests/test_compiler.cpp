#include "fractalforge/compiler.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <regex>

#include "support/generators.hpp"
#include "support/scenes.hpp"

using namespace ff;

namespace {

std::vector<int> opcode_signs(const InstructionBuffer& b) {
    std::vector<int> out;
    for (const auto& m : b.instructions) out.push_back(m[slot::kOpcode] > 0 ? 1 : -1);
    return out;
}

}  // namespace

TEST(Compile, Fig1IsFiveInstructionsPostfix) {
    const InstructionBuffer b = compile(fftest::fig1_tree());
    ASSERT_EQ(b.size(), 5u);
    EXPECT_EQ(opcode_signs(b), (std::vector<int>{1, 1, -1, 1, -1}));
    EXPECT_EQ(b.instructions[0][slot::kOpcode], static_cast<double>(PrimitiveKind::Box));
    EXPECT_EQ(b.instructions[1][slot::kOpcode], static_cast<double>(PrimitiveKind::Sphere));
    EXPECT_EQ(b.instructions[2][slot::kOpcode], -static_cast<double>(CombineOp::Kind::Subtract));
    EXPECT_EQ(b.instructions[3][slot::kOpcode], static_cast<double>(PrimitiveKind::BoxFrame));
    EXPECT_EQ(b.instructions[4][slot::kOpcode], -static_cast<double>(CombineOp::Kind::Union));
    EXPECT_EQ(b.node_index.at(1), 0u);
    EXPECT_EQ(b.node_index.at(2), 1u);
    EXPECT_EQ(b.node_index.at(3), 3u);
    EXPECT_DOUBLE_EQ(b.instructions[1][slot::kParams], 1.25);
    EXPECT_DOUBLE_EQ(b.instructions[3][slot::kMaterial], 2.0);
    EXPECT_NO_THROW(verify_postfix(b));
}

TEST(Compile, LayoutEncodesTransform) {
    SceneTree t;
    SceneNode n;
    n.primitive = PrimitiveParams::torus(1.0, 0.25);
    n.transform.translation = {1.0, 2.0, 3.0};
    n.transform.rotation = Quat::from_axis_angle({0.0, 1.0, 0.0}, 0.5);
    n.transform.scale = 1.5;
    n.material = 0;
    t.root = n;
    const auto m = compile(t).instructions.at(0);
    EXPECT_EQ(m[0], 1.0);
    EXPECT_EQ(m[1], 2.0);
    EXPECT_EQ(m[2], 3.0);
    const Quat q{m[3], m[4], m[5], m[6]};
    EXPECT_NEAR(q.norm(), 1.5, 1e-15);
    EXPECT_EQ(m[9], 0.0);
}

TEST(Compile, SmoothingRadiusOnOperator) {
    SceneTree t = fftest::fig1_tree();
    t.root->children[1].combine = CombineOp::smooth_union(0.3);
    const auto b = compile(t);
    EXPECT_EQ(b.instructions[4][slot::kOpcode], -static_cast<double>(CombineOp::Kind::SmoothUnion));
    EXPECT_EQ(b.instructions[4][slot::kSmoothing], 0.3);
}

TEST(Compile, EmptyTree) {
    const auto b = compile(SceneTree{});
    EXPECT_EQ(b.size(), 0u);
    EXPECT_TRUE(std::isinf(interpret(b, {0, 0, 0}).distance));
}

TEST(Interpret, MatchesTreeOnFig1) {
    for (bool reordered : {false, true}) {
        const SceneTree t = fftest::fig1_tree(reordered);
        const auto b = compile(t);
        fftest::Gen g(4);
        for (int i = 0; i < 1000; ++i) {
            const Vec3 p = g.vec(-2.0, 2.0);
            const Sample a = interpret(b, p);
            const Sample e = eval_tree(t, p);
            ASSERT_EQ(a.distance, e.distance);
            ASSERT_EQ(a.material, e.material);
        }
    }
}

TEST(Interpret, MatchesTreeOnRandomTrees) {
    fftest::Gen g(77);
    fftest::Gen::TreeOptions o;
    for (int n = 0; n < 200; ++n) {
        const SceneTree t = g.tree(o);
        ASSERT_TRUE(validate(t).empty());
        const auto b = compile(t);
        for (int i = 0; i < 50; ++i) {
            const Vec3 p = g.vec(-3.0, 3.0);
            const Sample a = interpret(b, p);
            const Sample e = eval_tree(t, p);
            ASSERT_NEAR(a.distance, e.distance, 1e-9);
            ASSERT_EQ(a.material, e.material);
        }
    }
}

TEST(Interpret, RejectsMalformedBuffers) {
    auto b = compile(fftest::fig1_tree());
    auto underflow = b;
    underflow.instructions[1][slot::kOpcode] = -1.0;
    EXPECT_THROW(interpret(underflow, {0, 0, 0}), MalformedBuffer);
    EXPECT_THROW(verify_postfix(underflow), MalformedBuffer);

    auto leftover = b;
    leftover.instructions.pop_back();
    leftover.modifier_ranges.pop_back();
    EXPECT_THROW(interpret(leftover, {0, 0, 0}), MalformedBuffer);

    auto bad_op = b;
    bad_op.instructions[0][slot::kOpcode] = 99.0;
    EXPECT_THROW(interpret(bad_op, {0, 0, 0}), MalformedBuffer);

    auto ranges = b;
    ranges.modifier_ranges.clear();
    EXPECT_THROW(interpret(ranges, {0, 0, 0}), MalformedBuffer);

    InstructionBuffer overflow;
    InstructionMatrix push{};
    push[slot::kOpcode] = 1.0;
    push[slot::kRotation] = 1.0;
    push[slot::kParams] = 1.0;
    for (int i = 0; i < kValueStackCapacity + 1; ++i) {
        overflow.instructions.push_back(push);
        overflow.modifier_ranges.push_back({});
    }
    EXPECT_THROW(interpret(overflow, {0, 0, 0}), MalformedBuffer);
}

TEST(Compile, RejectsOversizedTrees) {
    SceneTree t;
    SceneNode leaf;
    leaf.primitive = PrimitiveParams::sphere(1.0);
    t.root = leaf;
    for (int i = 1; i <= kMaxNodes; ++i) {
        SceneNode c = leaf;
        c.id = i;
        t.root->children.push_back(c);
    }
    try {
        compile(t);
        FAIL() << "expected CompileError";
    } catch (const CompileError& e) {
        EXPECT_EQ(e.kind(), CompileError::Kind::TooManyNodes);
    }
}

TEST(UpdateParams, EqualsRecompile) {
    fftest::Gen g(8);
    fftest::Gen::TreeOptions o;
    SceneTree t = g.tree(o);
    InstructionBuffer live = compile(t);
    std::vector<int> ids;
    for (const auto& [id, index] : live.node_index) ids.push_back(id);
    for (int i = 0; i < 300; ++i) {
        const int id = ids[g.integer(0, static_cast<int>(ids.size()) - 1)];
        if (g.chance(0.5)) {
            const auto p = g.params(find_node(t, id).primitive.kind);
            t = mutate_params(std::move(t), id, p);
            update_params(live, id, p);
        } else {
            const auto tr = g.transform();
            t = mutate_transform(std::move(t), id, tr);
            update_transform(live, id, tr);
        }
        const auto fresh = compile(t);
        ASSERT_EQ(live.instructions.size(), fresh.instructions.size());
        ASSERT_EQ(0, std::memcmp(live.instructions.data(), fresh.instructions.data(),
                                 live.instructions.size() * sizeof(InstructionMatrix)));
        ASSERT_EQ(live, fresh);
    }
}

TEST(UpdateParams, Errors) {
    auto b = compile(fftest::fig1_tree());
    EXPECT_THROW(update_params(b, 42, PrimitiveParams::sphere(1.0)), UnknownNodeId);
    EXPECT_THROW(update_params(b, 2, PrimitiveParams::box({1, 1, 1})), KindChangeRequiresRecompile);
}

TEST(Dump, RoundTrip) {
    fftest::Gen g(12);
    fftest::Gen::TreeOptions o;
    for (int i = 0; i < 50; ++i) {
        const auto b = compile(g.tree(o));
        const std::string bytes = dump_buffer(b);
        uint64_t count = 0;
        std::memcpy(&count, bytes.data(), 8);
        EXPECT_EQ(count, b.size());
        EXPECT_EQ(restore_buffer(bytes), b);
    }
}

TEST(Dump, RejectsTruncated) {
    const std::string bytes = dump_buffer(compile(fftest::fig1_tree()));
    EXPECT_THROW(restore_buffer(bytes.substr(0, 20)), MalformedBuffer);
    EXPECT_THROW(restore_buffer(bytes.substr(0, 4)), MalformedBuffer);
}

TEST(Dump, WithoutSideTableUsesPositions) {
    const auto b = compile(fftest::fig1_tree());
    const std::string bytes = dump_buffer(b);
    const std::string matrices_only = bytes.substr(0, 8 + b.size() * 16 * 8);
    const auto r = restore_buffer(matrices_only);
    EXPECT_EQ(r.instructions, b.instructions);
    fftest::Gen g(1);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p = g.vec(-2, 2);
        EXPECT_EQ(interpret(r, p).distance, interpret(b, p).distance);
    }
}

TEST(Shader, Fig1Emission) {
    const std::string src = emit_shader_source(fftest::fig1_tree());
    EXPECT_EQ(src, emit_shader_source(fftest::fig1_tree()));
    // One distance call per node in emission order, one operator per edge.
    const std::regex call(R"(\bsd(Box|Sphere|BoxFrame)\(q, )");
    std::vector<std::string> calls;
    for (auto it = std::sregex_iterator(src.begin(), src.end(), call); it != std::sregex_iterator(); ++it) {
        calls.push_back((*it)[1]);
    }
    EXPECT_EQ(calls, (std::vector<std::string>{"Box", "Sphere", "BoxFrame"}));
    const size_t sub = src.find("opSubtract(r");
    const size_t uni = src.find("opUnion(r");
    ASSERT_NE(sub, std::string::npos);
    ASSERT_NE(uni, std::string::npos);
    EXPECT_LT(src.find("sdSphere(q"), sub);
    EXPECT_LT(sub, src.find("sdBoxFrame(q"));
    EXPECT_LT(src.find("sdBoxFrame(q"), uni);
    EXPECT_EQ(src.find("float sdTorus"), std::string::npos);
    EXPECT_NE(src.find("float2 Map(float3 pos)"), std::string::npos);
}

TEST(Shader, ParamsComeFromBuffer) {
    // Editing a parameter must not change the emitted text.
    const SceneTree a = fftest::fig1_tree();
    const SceneTree b = mutate_params(a, 2, PrimitiveParams::sphere(0.9));
    EXPECT_EQ(emit_shader_source(a), emit_shader_source(b));
    const SceneTree c = fftest::fig1_tree(true);
    EXPECT_NE(emit_shader_source(a), emit_shader_source(c));
    EXPECT_NE(emit_shader_source(SceneTree{}).find("1.0e30"), std::string::npos);
}
