#pragma once

#include "voxelcast/vec.hpp"
#include "voxelcast/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace voxelcast {

enum class Interpolation { trilinear, tricubic };

std::string to_string(Interpolation interpolation);
Interpolation interpolation_from_string(const std::string& name);

/// Read-only window onto a voxel array. Indices are global volume indices:
/// they clamp to the volume first, then to the window. A window covering the
/// whole volume gives plain clamp-to-edge sampling; a brick window gives
/// block-local sampling.
template <typename T>
struct VoxelView {
    const T* data = nullptr;
    std::array<int, 3> origin{0, 0, 0};
    std::array<int, 3> extent{0, 0, 0};
    std::array<int, 3> volume_dims{0, 0, 0};

    /// Window-relative index for each of `count` taps starting at global index `first`.
    void taps(int axis, int first, int count, int* out) const
    {
        const int lo = origin[axis];
        const int hi = origin[axis] + extent[axis] - 1;
        const int last = volume_dims[axis] - 1;
        for (int t = 0; t < count; ++t) {
            const int g = std::clamp(first + t, 0, last);
            out[t] = std::clamp(g, lo, hi) - lo;
        }
    }
};

VoxelView<std::int16_t> whole_view(const ScalarVolume& volume);

namespace detail {

inline void catmull_rom_weights(double t, double w[4])
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = 0.5 * (-t + 2.0 * t2 - t3);
    w[1] = 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3);
    w[2] = 0.5 * (t + 4.0 * t2 - 3.0 * t3);
    w[3] = 0.5 * (-t2 + t3);
}

/// Splits a continuous coordinate into base index and fraction after clamping to [0, n-1].
inline int split_coordinate(double p, int n, double& frac)
{
    p = std::clamp(p, 0.0, static_cast<double>(n - 1));
    const double f = std::floor(p);
    frac = p - f;
    return static_cast<int>(f);
}

inline double to_real(std::int16_t v) { return static_cast<double>(v); }

}  // namespace detail

/// Trilinear interpolation. `Convert` maps a stored voxel to an accumulable value.
template <typename T, typename Convert>
auto trilinear(const VoxelView<T>& view, Vec3 p, Convert convert)
{
    double f[3];
    int base[3];
    for (int a = 0; a < 3; ++a) base[a] = detail::split_coordinate(p[a], view.volume_dims[a], f[a]);
    int ix[2], iy[2], iz[2];
    view.taps(0, base[0], 2, ix);
    view.taps(1, base[1], 2, iy);
    view.taps(2, base[2], 2, iz);
    const std::size_t sx = static_cast<std::size_t>(view.extent[0]);
    const std::size_t sxy = sx * static_cast<std::size_t>(view.extent[1]);
    const double wx[2] = {1.0 - f[0], f[0]};
    const double wy[2] = {1.0 - f[1], f[1]};
    const double wz[2] = {1.0 - f[2], f[2]};
    using Acc = decltype(convert(view.data[0]));
    Acc acc{};
    for (int c = 0; c < 2; ++c) {
        for (int b = 0; b < 2; ++b) {
            const T* row = view.data + iz[c] * sxy + iy[b] * sx;
            const double w = wz[c] * wy[b];
            acc += convert(row[ix[0]]) * (w * wx[0]);
            acc += convert(row[ix[1]]) * (w * wx[1]);
        }
    }
    return acc;
}

/// Separable Catmull-Rom over the 4x4x4 neighbourhood.
template <typename T, typename Convert>
auto tricubic(const VoxelView<T>& view, Vec3 p, Convert convert)
{
    double f[3];
    int base[3];
    for (int a = 0; a < 3; ++a) base[a] = detail::split_coordinate(p[a], view.volume_dims[a], f[a]);
    int ix[4], iy[4], iz[4];
    view.taps(0, base[0] - 1, 4, ix);
    view.taps(1, base[1] - 1, 4, iy);
    view.taps(2, base[2] - 1, 4, iz);
    double wx[4], wy[4], wz[4];
    detail::catmull_rom_weights(f[0], wx);
    detail::catmull_rom_weights(f[1], wy);
    detail::catmull_rom_weights(f[2], wz);
    const std::size_t sx = static_cast<std::size_t>(view.extent[0]);
    const std::size_t sxy = sx * static_cast<std::size_t>(view.extent[1]);
    using Acc = decltype(convert(view.data[0]));
    Acc acc{};
    for (int c = 0; c < 4; ++c) {
        for (int b = 0; b < 4; ++b) {
            const T* row = view.data + iz[c] * sxy + iy[b] * sx;
            Acc line = convert(row[ix[0]]) * wx[0];
            line += convert(row[ix[1]]) * wx[1];
            line += convert(row[ix[2]]) * wx[2];
            line += convert(row[ix[3]]) * wx[3];
            acc += line * (wz[c] * wy[b]);
        }
    }
    return acc;
}

template <typename T, typename Convert>
auto interpolate(const VoxelView<T>& view, Vec3 p, Interpolation mode, Convert convert)
{
    return mode == Interpolation::tricubic ? tricubic(view, p, convert) : trilinear(view, p, convert);
}

inline double sample_scalar(const VoxelView<std::int16_t>& view, Vec3 p, Interpolation mode)
{
    return interpolate(view, p, mode, detail::to_real);
}

/// Central differences of the interpolant, h = 0.5 voxel, returned per mm.
inline Vec3 scalar_gradient(const VoxelView<std::int16_t>& view, Vec3 p, Interpolation mode, Vec3 spacing)
{
    constexpr double h = 0.5;
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 lo = p;
        Vec3 hi = p;
        lo[a] -= h;
        hi[a] += h;
        g[a] = (sample_scalar(view, hi, mode) - sample_scalar(view, lo, mode)) / (2.0 * h) / spacing[a];
    }
    return g;
}

/// Positions are continuous voxel coordinates, origin at the centre of voxel (0,0,0).
double sample_trilinear(const ScalarVolume& volume, Vec3 p);
double sample_tricubic(const ScalarVolume& volume, Vec3 p);
double sample(const ScalarVolume& volume, Vec3 p, Interpolation mode);
Vec3 gradient(const ScalarVolume& volume, Vec3 p, Interpolation mode);

}  // namespace voxelcast
