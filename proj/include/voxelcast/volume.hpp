#pragma once

#include "voxelcast/vec.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voxelcast {

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    constexpr int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    constexpr std::size_t voxel_count() const
    {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    friend constexpr bool operator==(Dims, Dims) = default;
};

struct ValueRange {
    std::int16_t min = 0;
    std::int16_t max = 0;
    friend constexpr bool operator==(ValueRange, ValueRange) = default;
};

/// Regular grid of calibrated 16-bit scalars, x-fastest. Voxel (i,j,k) sits at
/// physical position (i*sx, j*sy, k*sz) mm. Immutable after construction.
class ScalarVolume {
public:
    ScalarVolume(Dims dims, Vec3 spacing, std::vector<std::int16_t> values, std::size_t clamped_count = 0);

    Dims dims() const noexcept { return dims_; }
    Vec3 spacing() const noexcept { return spacing_; }
    ValueRange value_range() const noexcept { return range_; }
    std::span<const std::int16_t> values() const noexcept { return values_; }

    /// Number of source samples that had to be clamped into the int16 range.
    std::size_t clamped_count() const noexcept { return clamped_; }

    std::size_t index(int i, int j, int k) const noexcept
    {
        return static_cast<std::size_t>(i)
            + static_cast<std::size_t>(dims_.nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.ny) * k);
    }
    std::int16_t at(int i, int j, int k) const noexcept { return values_[index(i, j, k)]; }

    /// Physical extent of the sampled region: (n-1)*spacing per axis.
    Vec3 physical_extent() const noexcept;

private:
    Dims dims_;
    Vec3 spacing_;
    std::vector<std::int16_t> values_;
    ValueRange range_;
    std::size_t clamped_ = 0;
};

/// One decoded CT slice prior to calibration.
struct SliceImage {
    int rows = 0;
    int cols = 0;
    /// (row spacing, column spacing) in mm, as stored in PixelSpacing.
    std::array<double, 2> pixel_spacing{1.0, 1.0};
    double slice_position = 0.0;
    double rescale_slope = 1.0;
    double rescale_intercept = 0.0;
    bool signed_samples = true;
    /// Row-major raw stored values (16-bit, widened).
    std::vector<std::int32_t> samples;

    void validate() const;
};

enum class VolumeSource { dicom, raw, phantom };

std::string to_string(VolumeSource source);
VolumeSource volume_source_from_string(const std::string& name);

struct VolumeManifest {
    std::string id;
    Dims dims;
    Vec3 spacing;
    ValueRange value_range;
    VolumeSource source = VolumeSource::raw;
    std::string created_at;
};

}  // namespace voxelcast
