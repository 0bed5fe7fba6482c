#pragma once

#include "voxelcast/phantom.hpp"
#include "voxelcast/raw.hpp"
#include "voxelcast/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace voxelcast {

/// Parses every slice and assembles them into one volume.
ScalarVolume volume_from_dicom_files(const std::vector<std::vector<std::uint8_t>>& files);
/// Zip archive of single-frame slices.
ScalarVolume volume_from_dicom_zip(std::span<const std::uint8_t> archive);
/// Every regular file in the directory (non-recursive) is read as a slice.
ScalarVolume volume_from_dicom_dir(const std::filesystem::path& dir);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace voxelcast
