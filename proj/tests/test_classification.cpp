#include "voxelcast/classification.hpp"
#include "voxelcast/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace voxelcast;

namespace {

const TransferFunction kRamp({{0.0, {0, 0, 0, 0}}, {100.0, {1, 1, 1, 1}}}, 0.0, 100.0);

/// Brute-force front-to-back integral of a linear ramp, straight from the
/// definition: n equal pieces of length 1/n, opacity per unit length from the TF.
Rgba brute_force_segment(const TransferFunction& tf, double front, double back, int n)
{
    double r = 0, g = 0, b = 0, a = 0;
    for (int j = 0; j < n; ++j) {
        const Rgba c = tf.evaluate(front + (back - front) * (j + 0.5) / n);
        const double alpha = 1.0 - std::pow(1.0 - c.a, 1.0 / n);
        const double t = 1.0 - a;
        r += t * alpha * c.r;
        g += t * alpha * c.g;
        b += t * alpha * c.b;
        a += t * alpha;
    }
    return {float(r), float(g), float(b), float(a)};
}

}  // namespace

TEST_CASE("transfer function evaluation")
{
    const Rgba mid = kRamp.evaluate(50.0);
    CHECK(mid.r == doctest::Approx(0.5));
    CHECK(mid.a == doctest::Approx(0.5));
    CHECK(kRamp.evaluate(-10.0) == kRamp.evaluate(0.0));
    CHECK(kRamp.evaluate(1000.0) == kRamp.evaluate(100.0));
    const TransferFunction single(std::vector<ControlPoint>{{5.0, {0.2f, 0.3f, 0.4f, 0.5f}}});
    CHECK(single.evaluate(-1000.0) == single.evaluate(3000.0));
    CHECK_THROWS_AS(TransferFunction({}), Error);
    CHECK_THROWS_AS(TransferFunction({{1.0, {0, 0, 0, 0}}, {0.0, {0, 0, 0, 0}}}), Error);
    CHECK_THROWS_AS(TransferFunction(std::vector<ControlPoint>{{0.0, {0, 0, 0, 1.5f}}}), Error);
}

TEST_CASE("LUT lookups")
{
    const ClassifiedLUT lut = build_lut(kRamp, 101);
    CHECK(lut.bin_center(50) == doctest::Approx(50.0));
    CHECK(lut.lookup(50.0).a == doctest::Approx(0.5));
    CHECK(lut.lookup(1e6) == lut.entries().back());
    CHECK(lut.lookup(-1e6) == lut.entries().front());
    // 50 is reachable only through interpolation of 0 and 100.
    CHECK(classify_post(lut, 0.5 * (0.0 + 100.0)).r == doctest::Approx(0.5));

    const ClassifiedLUT full = build_lut(TransferFunction::preset("bone"));
    CHECK(full.bins() == 4096);
    CHECK(full.bin_center(0) == -1024.0);
    CHECK(full.bin_center(4095) == 3071.0);
    CHECK(full.bin_index(1000.0) == 2024);
    CHECK(full.max_opacity(-1024.0, 100.0) == 0.0f);
    CHECK(full.max_opacity(-1024.0, 3071.0) > 0.8f);
}

TEST_CASE("presets and JSON forms")
{
    for (const auto& name : TransferFunction::preset_names()) {
        const TransferFunction tf = TransferFunction::preset(name);
        const TransferFunction back = transfer_function_from_json(to_json(tf));
        CHECK(back.points().size() == tf.points().size());
        CHECK(transfer_function_from_json(name).points().size() == tf.points().size());
    }
    CHECK(TransferFunction::preset("bone").evaluate(-1000.0).a == 0.0f);
    CHECK_THROWS_AS(TransferFunction::preset("nope"), Error);
    const auto tf = transfer_function_from_json(nlohmann::json::parse(R"([[0,0,0,0,0],[10,1,0,0,1]])"));
    CHECK(tf.evaluate(5.0).r == doctest::Approx(0.5));
    try {
        transfer_function_from_json(nlohmann::json::parse(R"([[0,0,0]])"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidTransferFunction);
    }
}

TEST_CASE("pre-classified volume")
{
    const ScalarVolume v({3, 3, 3}, {1, 1, 1}, std::vector<std::int16_t>(27, 40));
    const ClassifiedLUT lut = build_lut(kRamp, 101);
    const RgbaVolume rgba = preclassify_volume(v, lut);
    CHECK(rgba.memory_bytes() == 27 * 4);
    CHECK(rgba.memory_bytes() == 2 * v.values().size() * sizeof(std::int16_t));
    for (const Rgba8 c : rgba.voxels) CHECK(c == rgba.voxels.front());
    CHECK(rgba.voxels.front().a == to_unorm8(0.4));
}

TEST_CASE("pre-integration table")
{
    const ClassifiedLUT lut = build_lut(kRamp, 256);
    SUBCASE("transparent transfer function")
    {
        const ClassifiedLUT clear = build_lut(TransferFunction({{0.0, {1, 1, 1, 0}}}, 0.0, 100.0), 64);
        const PreintegratedTable t = build_preintegrated(clear, 0.5, 32, 16);
        for (int f = 0; f < 32; ++f)
            for (int b = 0; b < 32; ++b) CHECK(t.at(f, b).a == 0.0f);
    }
    SUBCASE("diagonal equals single-step classification")
    {
        const PreintegratedTable t = build_preintegrated(lut, 0.5, 64, 64);
        for (int i = 0; i < 64; i += 7) {
            const double s = t.bin_center(i);
            const Rgba c = lut.lookup(s);
            CHECK(t.at(i, i).a == doctest::Approx(c.a).epsilon(1e-5));
            CHECK(t.at(i, i).r == doctest::Approx(c.r * c.a).epsilon(1e-5));
        }
    }
    SUBCASE("entries match a brute-force oracle and are not symmetric")
    {
        const TransferFunction asym({{0.0, {1, 0, 0, 0.9f}}, {50.0, {0, 1, 0, 0.1f}}, {100.0, {0, 0, 1, 0.6f}}}, 0.0, 100.0);
        const ClassifiedLUT alut = build_lut(asym, 4096);
        const PreintegratedTable t = build_preintegrated(alut, 0.5, 256, 64);
        std::mt19937 rng(11);
        std::uniform_int_distribution<int> bin(0, 255);
        for (int n = 0; n < 8; ++n) {
            const int f = bin(rng);
            const int b = bin(rng);
            const Rgba oracle = brute_force_segment(asym, t.bin_center(f), t.bin_center(b), 4096);
            CHECK(t.at(f, b).a == doctest::Approx(oracle.a).epsilon(2e-3));
            CHECK(t.at(f, b).r == doctest::Approx(oracle.r).epsilon(5e-3));
            CHECK(t.at(f, b).b == doctest::Approx(oracle.b).epsilon(5e-3));
        }
        const Rgba forward = t.at(0, 255);
        const Rgba backward = t.at(255, 0);
        CHECK(forward.r > backward.r);
        CHECK(forward.b < backward.b);
    }
}
