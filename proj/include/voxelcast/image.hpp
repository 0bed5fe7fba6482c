#pragma once

#include "voxelcast/classification.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace voxelcast {

struct RenderStats {
    std::uint64_t rays = 0;
    std::uint64_t samples_taken = 0;
    std::uint64_t samples_skipped = 0;
    std::uint64_t blocks_visited = 0;
    double wall_time_ms = 0.0;
};

nlohmann::json to_json(const RenderStats& stats);

/// Row-major straight-alpha RGBA8 image.
struct ImageRGBA {
    int width = 0;
    int height = 0;
    std::vector<Rgba8> pixels;
    RenderStats stats;

    ImageRGBA() = default;
    ImageRGBA(int w, int h, Rgba8 fill = {});

    Rgba8& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgba8& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    ImageRGBA crop(int x, int y, int w, int h) const;
};

/// Largest absolute per-channel difference (0..255).
int max_channel_difference(const ImageRGBA& a, const ImageRGBA& b);

std::vector<std::uint8_t> encode_png(const ImageRGBA& image);
std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> gray);
ImageRGBA decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const ImageRGBA& image);

}  // namespace voxelcast
