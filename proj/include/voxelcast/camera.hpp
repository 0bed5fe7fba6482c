#pragma once

#include "voxelcast/vec.hpp"

#include <json.hpp>

namespace voxelcast {

/// Pinhole camera in the volume's physical frame (mm).
struct Camera {
    Vec3 position{0.0, 0.0, 100.0};
    Vec3 look_at{0.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double vertical_fov = 40.0;  // degrees
    int width = 256;
    int height = 256;

    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

/// Ray through the centre of pixel (x, y); y grows downwards.
Ray generate_ray(const Camera& camera, int x, int y);

/// Camera orbiting `target` at `distance`, azimuth around +z measured from +x,
/// elevation above the xy plane (degrees). Up is +z unless looking straight down it.
Camera orbit_camera(Vec3 target, double distance, double azimuth_deg, double elevation_deg, int width, int height,
                    double vertical_fov = 40.0);

Camera camera_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Camera& camera);

}  // namespace voxelcast
