#include "voxelcast/render_request.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace voxelcast {

RenderRequest render_request_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidRequest, "render request must be a JSON object");
    }
    if (!j.contains("camera")) {
        throw Error(ErrorCode::InvalidCamera, "camera is required", "camera");
    }
    RenderRequest r;
    r.camera = camera_from_json(j.at("camera"));
    if (j.contains("transfer_function")) {
        r.transfer_function = transfer_function_from_json(j.at("transfer_function"));
    }
    if (j.contains("settings")) {
        r.settings = render_settings_from_json(j.at("settings"));
    }
    return r;
}

nlohmann::json to_json(const RenderRequest& r)
{
    return {{"camera", to_json(r.camera)}, {"transfer_function", to_json(r.transfer_function)}, {"settings", to_json(r.settings)}};
}

std::vector<std::uint8_t> render_png(const ScalarVolume& volume, const RenderRequest& request, const RenderOptions& options,
                                     RenderStats* stats)
{
    const ImageRGBA image = render(volume, request.camera, request.transfer_function, request.settings, options);
    if (stats) *stats = image.stats;
    return encode_png(image);
}

SliceAxis slice_axis_from_string(const std::string& name)
{
    if (name == "x") return SliceAxis::x;
    if (name == "y") return SliceAxis::y;
    if (name == "z") return SliceAxis::z;
    throw Error(ErrorCode::InvalidRequest, "axis must be x, y or z", "axis");
}

WindowLevel default_window(const ScalarVolume& volume)
{
    const ValueRange r = volume.value_range();
    return {std::max(1.0, double(r.max) - r.min), 0.5 * (double(r.max) + r.min)};
}

std::vector<std::uint8_t> slice_gray(const ScalarVolume& volume, SliceAxis axis, int index, WindowLevel wl, int& width,
                                     int& height)
{
    if (!(wl.window > 0.0) || !std::isfinite(wl.window) || !std::isfinite(wl.level)) {
        throw Error(ErrorCode::InvalidRequest, "window must be positive", "window");
    }
    const Dims d = volume.dims();
    const int limit = axis == SliceAxis::x ? d.nx : (axis == SliceAxis::y ? d.ny : d.nz);
    if (index < 0 || index >= limit) {
        throw Error(ErrorCode::InvalidRequest, "slice index " + std::to_string(index) + " outside [0, " + std::to_string(limit) + ")",
                    "index");
    }
    width = axis == SliceAxis::x ? d.ny : d.nx;
    height = axis == SliceAxis::z ? d.ny : d.nz;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            std::int16_t v = 0;
            switch (axis) {
            case SliceAxis::x: v = volume.at(index, c, r); break;
            case SliceAxis::y: v = volume.at(c, index, r); break;
            case SliceAxis::z: v = volume.at(c, r, index); break;
            }
            const double t = std::clamp((v - wl.level) / wl.window + 0.5, 0.0, 1.0);
            out[static_cast<std::size_t>(r) * width + c] = static_cast<std::uint8_t>(std::lround(t * 255.0));
        }
    }
    return out;
}

}  // namespace voxelcast
