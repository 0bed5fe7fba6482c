#pragma once

#include "voxelcast/camera.hpp"
#include "voxelcast/classification.hpp"
#include "voxelcast/image.hpp"
#include "voxelcast/raycaster.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace voxelcast {

/// {"camera": {...}, "transfer_function": "bone" | {...} | [...], "settings": {...}}
/// The transfer function defaults to "grayscale" and settings to their defaults.
struct RenderRequest {
    Camera camera;
    TransferFunction transfer_function = TransferFunction::preset("grayscale");
    RenderSettings settings;
};

RenderRequest render_request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RenderRequest& request);

/// Renders and encodes as PNG. `stats` receives the render statistics.
std::vector<std::uint8_t> render_png(const ScalarVolume& volume, const RenderRequest& request, const RenderOptions& options = {},
                                     RenderStats* stats = nullptr);

enum class SliceAxis { x, y, z };
SliceAxis slice_axis_from_string(const std::string& name);

struct WindowLevel {
    double window = 1.0;
    double level = 0.0;
};

/// Default window spans the value range; level is its centre.
WindowLevel default_window(const ScalarVolume& volume);

/// Grayscale slice: round(clamp((v - level) / window + 0.5, 0, 1) * 255).
/// z slices are nx x ny, y slices nx x nz, x slices ny x nz. Throws
/// InvalidRequest (field "index") when out of range.
std::vector<std::uint8_t> slice_gray(const ScalarVolume& volume, SliceAxis axis, int index, WindowLevel wl, int& width,
                                     int& height);

}  // namespace voxelcast
