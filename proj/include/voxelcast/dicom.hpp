#pragma once

#include "voxelcast/volume.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace voxelcast::dicom {

inline constexpr const char* kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";
inline constexpr const char* kImplicitVrLittleEndian = "1.2.840.10008.1.2";
inline constexpr const char* kExplicitVrBigEndian = "1.2.840.10008.1.2.2";
inline constexpr const char* kJpegBaseline = "1.2.840.10008.1.2.4.50";

constexpr std::uint32_t tag(std::uint16_t group, std::uint16_t element)
{
    return (static_cast<std::uint32_t>(group) << 16) | element;
}

inline constexpr std::uint32_t kTransferSyntaxUid = tag(0x0002, 0x0010);
inline constexpr std::uint32_t kImagePositionPatient = tag(0x0020, 0x0032);
inline constexpr std::uint32_t kSliceLocation = tag(0x0020, 0x1041);
inline constexpr std::uint32_t kSamplesPerPixel = tag(0x0028, 0x0002);
inline constexpr std::uint32_t kNumberOfFrames = tag(0x0028, 0x0008);
inline constexpr std::uint32_t kRows = tag(0x0028, 0x0010);
inline constexpr std::uint32_t kColumns = tag(0x0028, 0x0011);
inline constexpr std::uint32_t kPixelSpacing = tag(0x0028, 0x0030);
inline constexpr std::uint32_t kBitsAllocated = tag(0x0028, 0x0100);
inline constexpr std::uint32_t kPixelRepresentation = tag(0x0028, 0x0103);
inline constexpr std::uint32_t kRescaleIntercept = tag(0x0028, 0x1052);
inline constexpr std::uint32_t kRescaleSlope = tag(0x0028, 0x1053);
inline constexpr std::uint32_t kPixelData = tag(0x7FE0, 0x0010);

/// "(gggg,eeee)"
std::string format_tag(std::uint32_t t);

/// Decodes a single-frame, uncompressed, explicit-VR little-endian CT slice.
SliceImage parse_dicom_slice(std::span<const std::uint8_t> bytes);

struct WriteOptions {
    std::string transfer_syntax = kExplicitVrLittleEndian;
    /// Tags left out of the dataset (fixture generation for error paths).
    std::set<std::uint32_t> omit;
    int bits_allocated = 16;
};

/// Minimal Part-10 writer used for fixtures and phantom export.
std::vector<std::uint8_t> write_dicom_slice(const SliceImage& slice, const WriteOptions& options = {});

/// Sorts by position, checks geometry, and calibrates slope*raw+intercept into int16.
ScalarVolume assemble_volume(std::span<const SliceImage> slices);

}  // namespace voxelcast::dicom
