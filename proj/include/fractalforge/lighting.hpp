#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fractalforge/vec.hpp"

namespace ff {

struct Material {
    int id = 0;
    Vec3 albedo{0.8, 0.8, 0.8};
    Vec3 specular{0.2, 0.2, 0.2};
    double shininess = 32.0;

    friend bool operator==(const Material&, const Material&) = default;
};

struct Light {
    enum class Type { Directional, Point };

    Type type = Type::Directional;
    /// Directional: unit direction pointing from the surface towards the light. Point: world position.
    Vec3 vector{0.0, 1.0, 0.0};
    Vec3 color{1.0, 1.0, 1.0};
    double intensity = 1.0;

    friend bool operator==(const Light&, const Light&) = default;
};

/// Linear RGB image sampled as an equirectangular environment.
struct EnvironmentImage {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;
};

struct Skybox {
    enum class Type { Gradient, Image };

    Type type = Type::Gradient;
    Vec3 horizon{0.75, 0.85, 1.0};
    Vec3 zenith{0.25, 0.45, 0.85};
    /// Image skyboxes: path as written in the scene file, resolved by the loader.
    std::string image_path;
    std::shared_ptr<const EnvironmentImage> image;

    Vec3 sample(const Vec3& unit_dir) const;

    friend bool operator==(const Skybox& a, const Skybox& b) {
        return a.type == b.type && a.horizon == b.horizon && a.zenith == b.zenith && a.image_path == b.image_path;
    }
};

struct LightingConfig {
    Vec3 ambient{0.05, 0.05, 0.05};
    std::vector<Light> lights{Light{}};
    double shadow_sharpness = 8.0;
    Skybox skybox;

    friend bool operator==(const LightingConfig&, const LightingConfig&) = default;
};

}  // namespace ff
