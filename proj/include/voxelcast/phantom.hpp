#pragma once

#include "voxelcast/volume.hpp"

#include <string>

namespace voxelcast {

enum class PhantomKind { sphere, shell, torso };

std::string to_string(PhantomKind kind);
PhantomKind phantom_kind_from_string(const std::string& name);

inline constexpr std::int16_t kAirValue = -1000;
inline constexpr std::int16_t kDenseValue = 1000;

/// Radius (voxels) of the sphere phantom's 0-valued level set.
double sphere_phantom_radius(Dims dims);

/// Deterministic synthetic CT volumes with 1 mm spacing.
///  - sphere: radial ramp from +1000 (inside) to -1000 (outside), 4 voxels wide,
///    centred in the grid with its zero level at sphere_phantom_radius().
///  - shell: the same ramp applied to a spherical shell.
///  - torso: ellipsoidal soft-tissue body with fat, lungs and bone inclusions,
///    surrounded by air; partial-volume averaged over 2x2x2 sub-samples.
ScalarVolume generate_phantom(PhantomKind kind, Dims dims);

}  // namespace voxelcast
