#include "voxelcast/sampling.hpp"

#include "voxelcast/error.hpp"

namespace voxelcast {

std::string to_string(Interpolation interpolation)
{
    return interpolation == Interpolation::tricubic ? "tricubic" : "trilinear";
}

Interpolation interpolation_from_string(const std::string& name)
{
    if (name == "trilinear") return Interpolation::trilinear;
    if (name == "tricubic") return Interpolation::tricubic;
    throw Error(ErrorCode::InvalidSettings, "unknown interpolation '" + name + "'", "interpolation");
}

VoxelView<std::int16_t> whole_view(const ScalarVolume& volume)
{
    const Dims d = volume.dims();
    VoxelView<std::int16_t> view;
    view.data = volume.values().data();
    view.extent = {d.nx, d.ny, d.nz};
    view.volume_dims = {d.nx, d.ny, d.nz};
    return view;
}

double sample_trilinear(const ScalarVolume& volume, Vec3 p)
{
    return sample_scalar(whole_view(volume), p, Interpolation::trilinear);
}

double sample_tricubic(const ScalarVolume& volume, Vec3 p)
{
    return sample_scalar(whole_view(volume), p, Interpolation::tricubic);
}

double sample(const ScalarVolume& volume, Vec3 p, Interpolation mode)
{
    return sample_scalar(whole_view(volume), p, mode);
}

Vec3 gradient(const ScalarVolume& volume, Vec3 p, Interpolation mode)
{
    return scalar_gradient(whole_view(volume), p, mode, volume.spacing());
}

}  // namespace voxelcast
