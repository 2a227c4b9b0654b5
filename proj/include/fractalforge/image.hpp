#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fractalforge/render.hpp"

namespace ff {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit RGB after gamma 2.2 encoding, row-major from the top row.
std::vector<unsigned char> to_rgb8(const Framebuffer& fb);

/// PNG bytes of the gamma-encoded framebuffer.
std::string encode_png(const Framebuffer& fb);

/// Raw linear dump: "FFRAWF32" magic, u32 width, u32 height (little-endian),
/// then per pixel four little-endian f32 values: r, g, b, depth (inf on misses).
std::string encode_raw(const Framebuffer& fb);

/// Decodes a PNG into linear RGB (inverse gamma 2.2). Throws IoError.
EnvironmentImage decode_png(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ff
