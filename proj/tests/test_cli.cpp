#include "fractalforge/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <sstream>

#include "fractalforge/compiler.hpp"
#include "fractalforge/image.hpp"
#include "fractalforge/scene_io.hpp"
#include "support/png_read.hpp"
#include "support/scenes.hpp"

using namespace ff;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fractalforge");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string scene(const std::string& name) { return fftest::scene_path(name).string(); }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("ff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

size_t lit_pixels(const fftest::Rgb8& img, const fftest::Rgb8& background) {
    size_t n = 0;
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        if (img.pixels[i] != background.pixels[i] || img.pixels[i + 1] != background.pixels[i + 1] ||
            img.pixels[i + 2] != background.pixels[i + 2]) {
            ++n;
        }
    }
    return n;
}

}  // namespace

TEST_F(CliTest, RenderMatchesGolden) {
    const CliRun r = cli({"render", scene("fig1"), "-o", path("fig1.png"), "--width", "256", "--height", "256", "--threads", "1"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(read_file(path("fig1.png")), read_file(fftest::source_dir() / "tests" / "golden" / "fig1_256.png"));
}

TEST_F(CliTest, ThreadCountDoesNotChangeBytes) {
    ASSERT_EQ(cli({"render", scene("smooth_blend"), "-o", path("a.png"), "--width", "96", "--height", "64", "--threads", "1"}).code, 0);
    ASSERT_EQ(cli({"render", scene("smooth_blend"), "-o", path("b.png"), "--width", "96", "--height", "64", "--threads", "4"}).code, 0);
    EXPECT_EQ(read_file(path("a.png")), read_file(path("b.png")));
}

TEST_F(CliTest, RawOutputAndCameraFlags) {
    ASSERT_EQ(cli({"render", scene("fig1"), "-o", path("a.png"), "--raw", path("a.raw"), "--width", "32", "--height", "16"}).code,
              0);
    EXPECT_EQ(fftest::read_png_rgb8(read_file(path("a.png"))).width, 32);
    const std::string raw = read_file(path("a.raw"));
    EXPECT_EQ(raw.substr(0, 8), "FFRAWF32");
    EXPECT_EQ(raw.size(), 16u + 32 * 16 * 16);

    ASSERT_EQ(cli({"render", scene("fig1"), "-o", path("default.png"), "--width", "32", "--height", "32"}).code, 0);
    ASSERT_EQ(cli({"render", scene("fig1"), "-o", path("moved.png"), "--width", "32", "--height", "32", "--eye", "0", "0",
                   "6", "--fov", "30"})
                  .code,
              0);
    EXPECT_NE(read_file(path("default.png")), read_file(path("moved.png")));
}

TEST_F(CliTest, ExitCodes) {
    CliRun r = cli({"render", path("missing.json"), "-o", path("x.png")});
    EXPECT_EQ(r.code, kExitIo);
    EXPECT_FALSE(r.err.empty());

    write_file(path("bad.json"), "{\n  \"version\": 1,\n  \"root\": {\"id\": 1, \"shape\": \"spheer\", \"params\": [1]}\n}\n");
    r = cli({"render", path("bad.json"), "-o", path("x.png")});
    EXPECT_EQ(r.code, kExitInvalidScene);
    EXPECT_NE(r.err.find("bad.json:3:30: UnknownShape"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("x.png")));

    r = cli({"validate", path("bad.json")});
    EXPECT_EQ(r.code, kExitInvalidScene);

    r = cli({"render", scene("fig1"), "-o", path("x.png"), "--width", "30", "--height", "30"});
    EXPECT_EQ(r.code, kExitInvalidScene);
    EXPECT_NE(r.err.find("divisible"), std::string::npos);

    r = cli({"render", scene("fig1"), "-o", (dir_ / "no" / "dir" / "x.png").string(), "--width", "16", "--height", "16"});
    EXPECT_EQ(r.code, kExitIo);

    EXPECT_NE(cli({"render"}).code, kExitOk);
    EXPECT_NE(cli({"frobnicate"}).code, kExitOk);
}

TEST_F(CliTest, Validate) {
    const CliRun r = cli({"validate", scene("primitives")});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(": ok (11 nodes)"), std::string::npos) << r.out;
}

TEST_F(CliTest, AnimateFrameCountAndContent) {
    CliRun r = cli({"animate", scene("animated_radius"), "-o", path("frames"), "--fps", "4", "--duration", "2", "--width", "64",
                 "--height", "64"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(path("frames"))) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    ASSERT_EQ(names.size(), 8u);
    EXPECT_EQ(names.front(), "frame_00000.png");
    EXPECT_EQ(names.back(), "frame_00007.png");

    // The radius grows from 0.5 to 1.5 over two seconds, so the sphere covers more pixels each frame.
    ASSERT_EQ(cli({"render", scene("empty"), "-o", path("sky.png"), "--width", "64", "--height", "64", "--eye", "0", "0",
                   "6", "--fov", "40"})
                  .code,
              0);
    const auto sky = fftest::read_png_rgb8(read_file(path("sky.png")));
    size_t prev = 0;
    for (const auto& name : names) {
        const size_t lit = lit_pixels(fftest::read_png_rgb8(read_file(path("frames/" + name))), sky);
        EXPECT_GT(lit, prev) << name;
        prev = lit;
    }

    r = cli({"animate", scene("fig1"), "-o", path("still"), "--fps", "2", "--duration", "1", "--width", "32", "--height",
             "32"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(read_file(path("still/frame_00000.png")), read_file(path("still/frame_00001.png")));
}

TEST_F(CliTest, CompileEmitsShaderAndBuffer) {
    CliRun r = cli({"compile", scene("fig1"), "--emit", "shader"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, emit_shader_source(fftest::fig1_tree()));

    r = cli({"compile", scene("fig1"), "--emit", "buffer", "-o", path("fig1.bin")});
    ASSERT_EQ(r.code, 0);
    const InstructionBuffer b = restore_buffer(read_file(path("fig1.bin")));
    EXPECT_EQ(b.size(), 5u);
    EXPECT_EQ(b.instructions, compile(fftest::fig1_tree()).instructions);

    EXPECT_NE(cli({"compile", scene("fig1"), "--emit", "spirv"}).code, 0);
}

TEST_F(CliTest, BenchCsv) {
    const CliRun r = cli({"bench", scene("fig1"), "--width", "64", "--height", "64", "--threads", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header, direct, pyramid;
    std::getline(in, header);
    std::getline(in, direct);
    std::getline(in, pyramid);
    EXPECT_EQ(header, "mode,width,height,levels,threads,depth_map_calls,shading_map_calls,total_map_calls,wall_ms");
    const std::regex row(R"((direct|pyramid),64,64,(\d+),1,(\d+),(\d+),(\d+),[0-9.]+)");
    std::smatch m;
    ASSERT_TRUE(std::regex_match(direct, m, row)) << direct;
    EXPECT_EQ(m[2].str(), "1");
    const uint64_t direct_total = std::stoull(m[5]);
    EXPECT_EQ(std::stoull(m[3]) + std::stoull(m[4]), direct_total);
    ASSERT_TRUE(std::regex_match(pyramid, m, row)) << pyramid;
    EXPECT_EQ(m[1].str(), "pyramid");
    EXPECT_EQ(m[2].str(), "3");
}
