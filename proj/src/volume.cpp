#include "voxelcast/volume.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>

namespace voxelcast {

ScalarVolume::ScalarVolume(Dims dims, Vec3 spacing, std::vector<std::int16_t> values, std::size_t clamped_count)
    : dims_(dims)
    , spacing_(spacing)
    , values_(std::move(values))
    , clamped_(clamped_count)
{
    if (dims_.nx < 2 || dims_.ny < 2 || dims_.nz < 2) {
        throw Error(ErrorCode::InvalidVolume, "every dimension must be at least 2");
    }
    if (!(spacing_.x > 0.0 && spacing_.y > 0.0 && spacing_.z > 0.0)) {
        throw Error(ErrorCode::InvalidVolume, "spacing must be positive");
    }
    if (values_.size() != dims_.voxel_count()) {
        throw Error(ErrorCode::SizeMismatch, "value count does not match dimensions");
    }
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    range_ = {*lo, *hi};
}

Vec3 ScalarVolume::physical_extent() const noexcept
{
    return {(dims_.nx - 1) * spacing_.x, (dims_.ny - 1) * spacing_.y, (dims_.nz - 1) * spacing_.z};
}

void SliceImage::validate() const
{
    if (rows <= 0 || cols <= 0) {
        throw Error(ErrorCode::InconsistentGeometry, "rows and columns must be positive");
    }
    if (!(pixel_spacing[0] > 0.0 && pixel_spacing[1] > 0.0)) {
        throw Error(ErrorCode::InconsistentGeometry, "pixel spacing must be positive");
    }
    if (samples.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw Error(ErrorCode::PixelDataLengthMismatch, "sample count does not match rows*cols");
    }
}

std::string to_string(VolumeSource source)
{
    switch (source) {
    case VolumeSource::dicom: return "dicom";
    case VolumeSource::raw: return "raw";
    case VolumeSource::phantom: return "phantom";
    }
    return "raw";
}

VolumeSource volume_source_from_string(const std::string& name)
{
    if (name == "dicom") return VolumeSource::dicom;
    if (name == "raw") return VolumeSource::raw;
    if (name == "phantom") return VolumeSource::phantom;
    throw Error(ErrorCode::InvalidRequest, "unknown volume source '" + name + "'");
}

}  // namespace voxelcast
