#include "fractalforge/raymarch.hpp"

namespace ff {

namespace {

// Rotation matrix (columns c0, c1, c2) to unit quaternion.
Quat quat_from_basis(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    const double m00 = c0.x, m10 = c0.y, m20 = c0.z;
    const double m01 = c1.x, m11 = c1.y, m21 = c1.z;
    const double m02 = c2.x, m12 = c2.y, m22 = c2.z;
    const double trace = m00 + m11 + m22;
    Quat q;
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
    } else if (m00 > m11 && m00 > m22) {
        const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
        q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
    } else if (m11 > m22) {
        const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
        q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
    } else {
        const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
        q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
    }
    return q.normalized();
}

}  // namespace

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y, int width, int height) {
    const Vec3 f = normalize(target - eye);
    const Vec3 r = normalize(cross(f, up));
    const Vec3 u = cross(r, f);
    Camera c;
    c.pose.translation = eye;
    c.pose.rotation = quat_from_basis(r, u, -f);
    c.fov_y = fov_y;
    c.width = width;
    c.height = height;
    return c;
}

Ray ray_through(const Camera& camera, double fx, double fy) {
    const double tan_half = std::tan(0.5 * camera.fov_y);
    const double aspect = static_cast<double>(camera.width) / camera.height;
    const double x = (2.0 * fx / camera.width - 1.0) * aspect * tan_half;
    const double y = (1.0 - 2.0 * fy / camera.height) * tan_half;
    const Vec3 local = normalize(Vec3{x, y, -1.0});
    return {camera.pose.translation, normalize(rotate(camera.pose.rotation, local))};
}

Ray generate_ray(const Camera& camera, int px, int py) { return ray_through(camera, px + 0.5, py + 0.5); }

double pixel_cone_angle(double fov_y, int height) { return std::sqrt(2.0) * std::tan(0.5 * fov_y) / height; }

LightSample light_sample(const Light& light, const Vec3& p, double max_t) {
    if (light.type == Light::Type::Directional) return {light.vector, max_t};
    const Vec3 to = light.vector - p;
    const double dist = length(to);
    return {to / dist, dist};
}

Vec3 blinn_phong(const Vec3& p, const Vec3& normal, const Vec3& view, const Material& material,
                 const LightingConfig& lighting, std::span<const double> shadows) {
    Vec3 color = lighting.ambient * material.albedo;
    const Vec3 to_eye = -view;
    for (size_t i = 0; i < lighting.lights.size(); ++i) {
        const Light& light = lighting.lights[i];
        const LightSample ls = light_sample(light, p, std::numeric_limits<double>::infinity());
        const double n_dot_l = dot(normal, ls.dir);
        if (n_dot_l <= 0.0) continue;
        const Vec3 half = normalize(ls.dir + to_eye);
        const double spec = std::pow(std::max(dot(normal, half), 0.0), material.shininess);
        const Vec3 lit = material.albedo * n_dot_l + material.specular * spec;
        color += lit * light.color * (shadows[i] * light.intensity);
    }
    return clamp01(color);
}

}  // namespace ff
