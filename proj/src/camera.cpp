#include "voxelcast/camera.hpp"

#include "voxelcast/error.hpp"

#include <cmath>
#include <numbers>

namespace voxelcast {

namespace {

Vec3 vec_from_json(const nlohmann::json& j, const char* field)
{
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::InvalidCamera, std::string(field) + " must be a 3-vector", field);
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

struct Basis {
    Vec3 forward, right, up;
};

Basis camera_basis(const Camera& c)
{
    const Vec3 forward = normalize(c.look_at - c.position);
    const Vec3 right = normalize(cross(forward, c.up));
    return {forward, right, cross(right, forward)};
}

}  // namespace

void Camera::validate() const
{
    const Vec3 view = look_at - position;
    if (!(length(view) > 0.0)) {
        throw Error(ErrorCode::InvalidCamera, "position and look_at coincide", "position");
    }
    if (!(length(up) > 0.0) || length(cross(normalize(view), normalize(up))) < 1e-9) {
        throw Error(ErrorCode::InvalidCamera, "up is zero or parallel to the view direction", "up");
    }
    if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) {
        throw Error(ErrorCode::InvalidCamera, "vertical_fov must lie in (0, 180)", "vertical_fov");
    }
    if (width <= 0 || height <= 0 || width > 16384 || height > 16384) {
        throw Error(ErrorCode::InvalidCamera, "image size must be positive and at most 16384", "image_size");
    }
}

Ray generate_ray(const Camera& camera, int x, int y)
{
    const Basis basis = camera_basis(camera);
    const double tan_half = std::tan(camera.vertical_fov * std::numbers::pi / 360.0);
    const double aspect = static_cast<double>(camera.width) / camera.height;
    const double px = (2.0 * (x + 0.5) / camera.width - 1.0) * tan_half * aspect;
    const double py = (1.0 - 2.0 * (y + 0.5) / camera.height) * tan_half;
    return {camera.position, normalize(basis.forward + basis.right * px + basis.up * py)};
}

Camera orbit_camera(Vec3 target, double distance, double azimuth_deg, double elevation_deg, int width, int height,
                    double vertical_fov)
{
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    Camera c;
    c.look_at = target;
    c.position = target + Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)} * distance;
    c.up = std::abs(std::cos(el)) < 1e-6 ? Vec3{0.0, 1.0, 0.0} : Vec3{0.0, 0.0, 1.0};
    c.vertical_fov = vertical_fov;
    c.width = width;
    c.height = height;
    return c;
}

Camera camera_from_json(const nlohmann::json& j)
{
    try {
        Camera c;
        c.position = vec_from_json(j.at("position"), "position");
        c.look_at = vec_from_json(j.at("look_at"), "look_at");
        if (j.contains("up")) c.up = vec_from_json(j.at("up"), "up");
        c.vertical_fov = j.value("vertical_fov", c.vertical_fov);
        if (j.contains("image_size")) {
            const auto& size = j.at("image_size");
            if (!size.is_array() || size.size() != 2) {
                throw Error(ErrorCode::InvalidCamera, "image_size must be [width, height]", "image_size");
            }
            c.width = size[0].get<int>();
            c.height = size[1].get<int>();
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidCamera, e.what(), "camera");
    }
}

nlohmann::json to_json(const Camera& c)
{
    return {
        {"position", {c.position.x, c.position.y, c.position.z}},
        {"look_at", {c.look_at.x, c.look_at.y, c.look_at.z}},
        {"up", {c.up.x, c.up.y, c.up.z}},
        {"vertical_fov", c.vertical_fov},
        {"image_size", {c.width, c.height}},
    };
}

}  // namespace voxelcast
