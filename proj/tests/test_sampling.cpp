#include "voxelcast/error.hpp"
#include "voxelcast/phantom.hpp"
#include "voxelcast/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace voxelcast;

namespace {

ScalarVolume fill(Dims d, Vec3 spacing, const std::function<double(int, int, int)>& f)
{
    std::vector<std::int16_t> v;
    v.reserve(d.voxel_count());
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) v.push_back(static_cast<std::int16_t>(std::lround(f(i, j, k))));
    return ScalarVolume(d, spacing, std::move(v));
}

/// Reference 1-D Catmull-Rom with clamp-to-edge, written from the kernel
/// definition (a = -0.5) rather than the weight polynomials.
double kernel(double x)
{
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

double catmull_rom_1d(const std::vector<double>& samples, double p)
{
    const int n = static_cast<int>(samples.size());
    p = std::clamp(p, 0.0, n - 1.0);
    const int base = std::min(static_cast<int>(std::floor(p)), n - 2);
    double sum = 0.0;
    for (int t = base - 1; t <= base + 2; ++t) {
        sum += kernel(p - t) * samples[std::clamp(t, 0, n - 1)];
    }
    return sum;
}

}  // namespace

TEST_CASE("trilinear basics")
{
    const ScalarVolume v = fill({4, 3, 2}, {1, 1, 1}, [](int i, int j, int k) { return 100 * i + 10 * j + k; });
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 4; ++i) {
                CHECK(sample_trilinear(v, {double(i), double(j), double(k)}) == v.at(i, j, k));
                CHECK(sample_tricubic(v, {double(i), double(j), double(k)}) == doctest::Approx(v.at(i, j, k)).epsilon(1e-12));
            }
    const ScalarVolume edge = fill({2, 2, 2}, {1, 1, 1}, [](int i, int, int) { return i == 0 ? 0 : 100; });
    CHECK(sample_trilinear(edge, {0.5, 0.0, 0.0}) == 50.0);
    CHECK(sample_trilinear(v, {-5, 0, 0}) == sample_trilinear(v, {0, 0, 0}));
    CHECK(sample_tricubic(v, {-5, 0, 0}) == sample_tricubic(v, {0, 0, 0}));
    CHECK(sample_trilinear(v, {1.25, 1.5, 0.75}) == doctest::Approx(125 + 15 + 0.75));
}

TEST_CASE("tricubic reproduces linear fields")
{
    const ScalarVolume v = fill({12, 12, 12}, {1, 1, 1}, [](int i, int j, int k) { return 2 * i + 3 * j - k; });
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    for (int n = 0; n < 500; ++n) {
        const Vec3 p{u(rng), u(rng), u(rng)};
        CHECK(std::abs(sample_tricubic(v, p) - (2 * p.x + 3 * p.y - p.z)) < 1e-4);
    }
}

TEST_CASE("tricubic on a cubic cross-section stays within 1e-3 of the field range")
{
    const int n = 32;
    const double scale = 30000.0 / std::pow(n - 1, 3);
    const ScalarVolume v = fill({n, 4, 4}, {1, 1, 1}, [&](int i, int, int) { return scale * i * i * i; });
    const double range = scale * std::pow(n - 1, 3);
    for (double x = 1.0; x <= n - 2.0; x += 0.0625) {
        const double exact = scale * x * x * x;
        CHECK(std::abs(sample_tricubic(v, {x, 1.5, 2.0}) - exact) <= 1e-3 * range);
    }
}

TEST_CASE("tricubic matches a tensor product of reference 1-D Catmull-Rom")
{
    const Dims d{7, 6, 5};
    const auto gx = [](int i) { return std::sin(0.9 * i) * 40.0; };
    const auto gy = [](int j) { return 3.0 + j * j * 0.5; };
    const auto gz = [](int k) { return k % 2 ? 2.0 : -1.0; };
    const ScalarVolume v = fill(d, {1, 1, 1}, [&](int i, int j, int k) { return gx(i) * gy(j) * gz(k); });
    // The product is only separable before rounding, so compare against the
    // unrounded lattice using a separable tolerance.
    std::vector<double> sx, sy, sz;
    for (int i = 0; i < d.nx; ++i) sx.push_back(gx(i));
    for (int j = 0; j < d.ny; ++j) sy.push_back(gy(j));
    for (int k = 0; k < d.nz; ++k) sz.push_back(gz(k));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 7.0);
    for (int n = 0; n < 300; ++n) {
        const Vec3 p{u(rng), u(rng) * 5.0 / 7.0, u(rng) * 4.0 / 7.0};
        const double expected = catmull_rom_1d(sx, p.x) * catmull_rom_1d(sy, p.y) * catmull_rom_1d(sz, p.z);
        // Rounding each voxel by <= 0.5 moves the result by at most 0.5 * (1.25^3).
        CHECK(std::abs(sample_tricubic(v, p) - expected) <= 0.5 * 1.953125 + 1e-9);
    }
}

TEST_CASE("gradients are per millimetre")
{
    const ScalarVolume ramp = fill({8, 8, 8}, {1, 1, 1}, [](int i, int, int) { return i; });
    for (const Interpolation mode : {Interpolation::trilinear, Interpolation::tricubic}) {
        const Vec3 g = gradient(ramp, {3.3, 4.1, 2.7}, mode);
        CHECK(g.x == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(std::abs(g.y) < 1e-4);
        CHECK(std::abs(g.z) < 1e-4);
    }
    const ScalarVolume stretched = fill({8, 8, 8}, {2, 1, 1}, [](int i, int, int) { return i; });
    CHECK(gradient(stretched, {3.3, 4.1, 2.7}, Interpolation::tricubic).x == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("sphere phantom gradient points along the radius")
{
    const ScalarVolume sphere = generate_phantom(PhantomKind::sphere, {64, 64, 64});
    const double c = 31.5;
    const double r = sphere_phantom_radius({64, 64, 64});
    for (const Interpolation mode : {Interpolation::trilinear, Interpolation::tricubic}) {
        const Vec3 g = gradient(sphere, {c + r, c, c}, mode);
        const double cos_angle = std::abs(g.x) / length(g);
        CHECK(std::acos(std::min(1.0, cos_angle)) * 180.0 / std::numbers::pi < 2.0);
        CHECK(g.x < 0.0);
    }
}

TEST_CASE("interpolation names")
{
    CHECK(interpolation_from_string("tricubic") == Interpolation::tricubic);
    CHECK(to_string(Interpolation::trilinear) == "trilinear");
    CHECK_THROWS_AS(interpolation_from_string("nearest"), Error);
}
