#pragma once

#include "voxelcast/volume.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voxelcast::raw {

enum class SampleFormat { u8, i16, u16 };

std::string to_string(SampleFormat format);
SampleFormat sample_format_from_string(const std::string& name);
std::size_t sample_width(SampleFormat format);

/// Sidecar describing a header-less little-endian dump.
struct RawManifest {
    Dims dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    SampleFormat format = SampleFormat::i16;
};

nlohmann::json to_json(const RawManifest& manifest);
RawManifest raw_manifest_from_json(const nlohmann::json& j);

/// Widens u8 directly, reinterprets i16, clamps u16 above 32767 (counted in
/// ScalarVolume::clamped_count()).
ScalarVolume load_raw(std::span<const std::uint8_t> bytes, Dims dims, Vec3 spacing, SampleFormat format);

/// i16 little-endian dump of the volume values.
std::vector<std::uint8_t> save_raw(const ScalarVolume& volume);

}  // namespace voxelcast::raw
