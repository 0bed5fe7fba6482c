#include "voxelcast/phantom.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace voxelcast {

namespace {

double ramp(double signed_distance)
{
    return std::clamp(500.0 * signed_distance, -1000.0, 1000.0);
}

struct Ellipsoid {
    Vec3 center;
    Vec3 semi_axes;

    bool contains(Vec3 p) const
    {
        const Vec3 d = divide(p - center, semi_axes);
        return dot(d, d) <= 1.0;
    }
};

double torso_value(Vec3 p)
{
    static const Ellipsoid body{{0.0, 0.0, 0.0}, {0.80, 0.58, 0.85}};
    static const Ellipsoid inner_body{{0.0, 0.0, 0.0}, {0.74, 0.52, 0.80}};
    static const Ellipsoid lungs[] = {
        {{-0.35, -0.05, 0.35}, {0.22, 0.28, 0.33}},
        {{0.35, -0.05, 0.35}, {0.22, 0.28, 0.33}},
    };
    static const Ellipsoid heart{{0.08, -0.12, 0.22}, {0.18, 0.16, 0.18}};
    static const Ellipsoid bones[] = {
        {{0.0, 0.36, 0.0}, {0.09, 0.09, 0.78}},     // spine
        {{-0.33, 0.10, -0.58}, {0.16, 0.22, 0.14}},  // pelvis
        {{0.33, 0.10, -0.58}, {0.16, 0.22, 0.14}},
        {{0.0, -0.46, 0.40}, {0.05, 0.04, 0.25}},   // sternum
    };

    if (!body.contains(p)) {
        return kAirValue;
    }
    for (const Ellipsoid& bone : bones) {
        if (bone.contains(p)) return 900.0;
    }
    if (heart.contains(p)) {
        return 120.0;
    }
    for (const Ellipsoid& lung : lungs) {
        if (lung.contains(p)) return -800.0;
    }
    if (!inner_body.contains(p)) {
        return -100.0;  // subcutaneous fat
    }
    return 40.0 + 15.0 * std::sin(7.0 * p.x) * std::sin(5.0 * p.y) * std::sin(3.0 * p.z);
}

}  // namespace

std::string to_string(PhantomKind kind)
{
    switch (kind) {
    case PhantomKind::sphere: return "sphere";
    case PhantomKind::shell: return "shell";
    case PhantomKind::torso: return "torso";
    }
    return "sphere";
}

PhantomKind phantom_kind_from_string(const std::string& name)
{
    if (name == "sphere") return PhantomKind::sphere;
    if (name == "shell") return PhantomKind::shell;
    if (name == "torso") return PhantomKind::torso;
    throw Error(ErrorCode::InvalidRequest, "unknown phantom kind '" + name + "'", "kind");
}

double sphere_phantom_radius(Dims dims)
{
    return 0.35 * std::min({dims.nx, dims.ny, dims.nz});
}

ScalarVolume generate_phantom(PhantomKind kind, Dims dims)
{
    if (dims.nx < 2 || dims.ny < 2 || dims.nz < 2) {
        throw Error(ErrorCode::InvalidVolume, "phantom dimensions must be at least 2");
    }
    std::vector<std::int16_t> values(dims.voxel_count());
    const Vec3 center{(dims.nx - 1) / 2.0, (dims.ny - 1) / 2.0, (dims.nz - 1) / 2.0};
    const double min_dim = std::min({dims.nx, dims.ny, dims.nz});

    std::size_t n = 0;
    for (int k = 0; k < dims.nz; ++k) {
        for (int j = 0; j < dims.ny; ++j) {
            for (int i = 0; i < dims.nx; ++i, ++n) {
                double v = 0.0;
                switch (kind) {
                case PhantomKind::sphere: {
                    const double r = length(Vec3{double(i), double(j), double(k)} - center);
                    v = ramp(sphere_phantom_radius(dims) - r);
                    break;
                }
                case PhantomKind::shell: {
                    const double r = length(Vec3{double(i), double(j), double(k)} - center);
                    v = std::min(ramp(0.40 * min_dim - r), ramp(r - 0.22 * min_dim));
                    break;
                }
                case PhantomKind::torso: {
                    double sum = 0.0;
                    for (int s = 0; s < 8; ++s) {
                        const Vec3 sub{i + ((s & 1) ? 0.75 : 0.25), j + ((s & 2) ? 0.75 : 0.25), k + ((s & 4) ? 0.75 : 0.25)};
                        const Vec3 unit{2.0 * sub.x / dims.nx - 1.0, 2.0 * sub.y / dims.ny - 1.0, 2.0 * sub.z / dims.nz - 1.0};
                        sum += torso_value(unit);
                    }
                    v = sum / 8.0;
                    break;
                }
                }
                values[n] = static_cast<std::int16_t>(std::lround(v));
            }
        }
    }
    return ScalarVolume(dims, {1.0, 1.0, 1.0}, std::move(values));
}

}  // namespace voxelcast
