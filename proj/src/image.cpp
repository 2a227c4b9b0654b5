#include "fractalforge/image.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ff {

namespace {

unsigned char encode_channel(double linear) {
    const double c = std::clamp(linear, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(255.0 * std::pow(c, 1.0 / 2.2)));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

std::vector<unsigned char> to_rgb8(const Framebuffer& fb) {
    std::vector<unsigned char> out;
    out.reserve(fb.color.size() * 3);
    for (const Vec3& c : fb.color) {
        out.push_back(encode_channel(c.x));
        out.push_back(encode_channel(c.y));
        out.push_back(encode_channel(c.z));
    }
    return out;
}

std::string encode_png(const Framebuffer& fb) {
    const std::vector<unsigned char> rgb = to_rgb8(fb);
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(fb.width);
    image.height = static_cast<png_uint_32>(fb.height);
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("png encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

std::string encode_raw(const Framebuffer& fb) {
    std::string out = "FFRAWF32";
    put_u32(out, static_cast<uint32_t>(fb.width));
    put_u32(out, static_cast<uint32_t>(fb.height));
    out.reserve(out.size() + fb.color.size() * 16);
    for (size_t i = 0; i < fb.color.size(); ++i) {
        const Vec3& c = fb.color[i];
        for (double v : {c.x, c.y, c.z, fb.depth[i]}) put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
    return out;
}

EnvironmentImage decode_png(std::string_view bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("png decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(std::string("png decode failed: ") + image.message);
    }
    EnvironmentImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.pixels.reserve(static_cast<size_t>(out.width) * out.height);
    const auto linear = [](unsigned char v) { return std::pow(v / 255.0, 2.2); };
    for (size_t i = 0; i + 2 < rgb.size(); i += 3) out.pixels.push_back({linear(rgb[i]), linear(rgb[i + 1]), linear(rgb[i + 2])});
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace ff
