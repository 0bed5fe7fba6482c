#include "voxelcast/error.hpp"
#include "voxelcast/image.hpp"
#include "voxelcast/phantom.hpp"
#include "voxelcast/raycaster.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/render_request.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace voxelcast;

namespace {

Vec3 center_of(const ScalarVolume& v)
{
    const Dims d = v.dims();
    const Vec3 s = v.spacing();
    return {(d.nx - 1) * s.x / 2, (d.ny - 1) * s.y / 2, (d.nz - 1) * s.z / 2};
}

double angle_between(Vec3 a, Vec3 b)
{
    return std::acos(std::clamp(dot(a, b) / (length(a) * length(b)), -1.0, 1.0));
}

}  // namespace

TEST_CASE("camera rays")
{
    Camera cam;
    cam.position = {10, -20, 30};
    cam.look_at = {1, 2, 3};
    cam.up = {0, 0, 1};
    cam.vertical_fov = 50;
    cam.width = 81;
    cam.height = 61;
    const Ray mid = generate_ray(cam, 40, 30);
    const Vec3 expected = normalize(cam.look_at - cam.position);
    CHECK(length(mid.direction - expected) < 1e-6);

    const double half = std::tan(50.0 * std::numbers::pi / 360.0);
    const double subtended = 2.0 * std::atan(half * (cam.height - 1.0) / cam.height);
    CHECK(std::abs(angle_between(generate_ray(cam, 40, 0).direction, generate_ray(cam, 40, 60).direction) - subtended) < 1e-4);
    for (int y = 0; y < cam.height; y += 6)
        for (int x = 0; x < cam.width; x += 8) CHECK(std::abs(length(generate_ray(cam, x, y).direction) - 1.0) < 1e-6);
    // y grows downwards.
    CHECK(generate_ray(cam, 40, 0).direction.z > generate_ray(cam, 40, 60).direction.z);

    Camera bad = cam;
    bad.look_at = bad.position;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.up = normalize(cam.look_at - cam.position);
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.vertical_fov = 180;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("front-to-back compositing")
{
    const Rgba none{0, 0, 0, 0};
    const Rgba red = composite_step(none, {1, 0, 0, 1}, 0.5, 0.5);
    CHECK(red == Rgba{1, 0, 0, 1});
    const Rgba partial{0.2f, 0.1f, 0.0f, 0.3f};
    CHECK(composite_step(partial, {1, 1, 1, 0}, 0.5, 0.5) == partial);
    Rgba acc = composite_step(none, {1, 0, 0, 0.5f}, 1.0, 1.0);
    acc = composite_step(acc, {0, 0, 1, 1}, 1.0, 1.0);
    CHECK(acc.r == doctest::Approx(0.5));
    CHECK(acc.g == doctest::Approx(0.0));
    CHECK(acc.b == doctest::Approx(0.5));
    CHECK(acc.a == doctest::Approx(1.0));
    // Two half steps equal one full step.
    const Rgba halves = composite_step(composite_step(none, {1, 1, 1, 0.4f}, 0.25, 0.5), {1, 1, 1, 0.4f}, 0.25, 0.5);
    const Rgba whole = composite_step(none, {1, 1, 1, 0.4f}, 0.5, 0.5);
    CHECK(halves.a == doctest::Approx(whole.a).epsilon(1e-6));
}

TEST_CASE("Phong shading")
{
    const Vec3 base{0.5, 0.5, 0.5};
    const Vec3 eye{0, 0, 1};
    const Vec3 unchanged = shade_phong(base, {0, 0, 0}, eye, eye);
    CHECK(unchanged.x == 0.5);
    // Normal is the negated gradient.
    const Vec3 facing = shade_phong(base, {0, 0, -3}, eye, eye);
    CHECK(facing.x == doctest::Approx(0.5 * 0.8 + 0.2));
    const Vec3 side = shade_phong(base, {-1, 0, 0}, eye, eye);
    CHECK(side.x == doctest::Approx(0.05));
    const Vec3 away = shade_phong(base, {0, 0, 1}, eye, eye);
    CHECK(away.x == doctest::Approx(0.05));
}

TEST_CASE("settings parsing")
{
    const RenderSettings s = render_settings_from_json(
        nlohmann::json::parse(R"({"mode":"isosurface","isovalue":10,"interpolation":"trilinear","step":0.25,"use_blocks":false})"));
    CHECK(s.mode == RenderMode::isosurface);
    CHECK(*s.isovalue == 10.0);
    CHECK(s.interpolation == Interpolation::trilinear);
    CHECK(render_settings_from_json(to_json(s)).step == s.step);
    for (const char* bad : {R"({"step":0})", R"({"mode":"mip"})", R"({"early_termination_alpha":1.5})", R"({"mode":"isosurface"})",
                            R"({"classification":"never"})"}) {
        CAPTURE(bad);
        try {
            render_settings_from_json(nlohmann::json::parse(bad));
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidSettings);
            CHECK(!e.field().empty());
        }
    }
}

TEST_CASE("transparent transfer function leaves only the background")
{
    const ScalarVolume v = generate_phantom(PhantomKind::torso, {64, 64, 64});
    const TransferFunction clear({{-1024.0, {1, 1, 1, 0}}, {3071.0, {1, 1, 1, 0}}});
    RenderSettings s;
    s.background = {0.2f, 0.4f, 0.6f, 1.0f};
    const Camera cam = orbit_camera(center_of(v), 150, 30, 20, 32, 32);
    const ImageRGBA img = render(v, cam, clear, s);
    const Rgba8 bg{to_unorm8(0.2), to_unorm8(0.4), to_unorm8(0.6), 255};
    for (const Rgba8 p : img.pixels) CHECK(p == bg);
    CHECK(img.stats.blocks_visited == 0);
    CHECK(img.stats.samples_taken == 0);
    CHECK(img.stats.rays == 32 * 32);
}

TEST_CASE("isosurface hit matches the analytic sphere")
{
    const Dims d{64, 64, 64};
    const ScalarVolume v = generate_phantom(PhantomKind::sphere, d);
    const Vec3 c = center_of(v);
    const double r = sphere_phantom_radius(d);
    RenderSettings s;
    s.mode = RenderMode::isosurface;
    s.isovalue = 0.0;
    for (const bool blocks : {false, true}) {
        for (const Interpolation mode : {Interpolation::trilinear, Interpolation::tricubic}) {
            s.use_blocks = blocks;
            s.interpolation = mode;
            s.block_size = 32;
            const Renderer renderer(v, TransferFunction::preset("bone"), s);
            for (const Vec3 dir : {Vec3{1, 0, 0}, Vec3{0, -1, 0}, normalize(Vec3{1, 1, 1})}) {
                const Ray ray{c - dir * 100.0, dir};
                const auto t = renderer.isosurface_hit(ray);
                REQUIRE(t.has_value());
                CHECK(std::abs(*t - (100.0 - r)) <= renderer.step() / 2);
            }
            CHECK_FALSE(renderer.isosurface_hit({c + Vec3{0, 0, 100}, Vec3{1, 0, 0}}).has_value());
        }
    }
    const ImageRGBA img = Renderer(v, TransferFunction::preset("bone"), s).render(orbit_camera(c, 150, 10, 10, 32, 32));
    CHECK(img.at(16, 16).a == 255);
    CHECK(img.at(16, 16).r > 0);
    CHECK(img.at(0, 0) == Rgba8{0, 0, 0, 255});

    s.isovalue = 5000.0;
    try {
        Renderer(v, TransferFunction::preset("bone"), s);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IsovalueOutOfRange);
    }
}

TEST_CASE("sub-rectangles and thread counts do not change pixels")
{
    const ScalarVolume v = generate_phantom(PhantomKind::torso, {64, 64, 64});
    const Camera cam = orbit_camera(center_of(v), 150, 40, 25, 48, 40);
    for (const ClassificationMode cls : {ClassificationMode::post, ClassificationMode::pre, ClassificationMode::preintegrated}) {
        RenderSettings s;
        s.classification = cls;
        s.block_size = 32;
        const Renderer renderer(v, TransferFunction::preset("soft-tissue"), s);
        const ImageRGBA full = renderer.render(cam, {1, std::nullopt});
        CHECK(renderer.render(cam, {3, std::nullopt}).pixels == full.pixels);
        CHECK(renderer.render(cam, {1, std::nullopt}).pixels == full.pixels);
        const ImageRGBA part = renderer.render(cam, {2, PixelRect{5, 7, 20, 13}});
        CHECK(part.pixels == full.crop(5, 7, 20, 13).pixels);
        CHECK(part.stats.rays == 20 * 13);
    }
}

TEST_CASE("early termination and empty-space skipping are lossless")
{
    for (const PhantomKind kind : {PhantomKind::sphere, PhantomKind::shell, PhantomKind::torso}) {
        CAPTURE(to_string(kind));
        const ScalarVolume v = generate_phantom(kind, {64, 64, 64});
        const Camera cam = orbit_camera(center_of(v), 150, 30, 20, 48, 48);
        for (const char* preset : {"bone", "soft-tissue"}) {
            CAPTURE(preset);
            const TransferFunction tf = TransferFunction::preset(preset);
            RenderSettings s;
            s.interpolation = Interpolation::trilinear;
            s.block_size = 32;
            const ImageRGBA base = render(v, cam, tf, s);
            RenderSettings no_et = s;
            no_et.early_termination_alpha = 1.0;
            CHECK(max_channel_difference(base, render(v, cam, tf, no_et)) <= 3);
            RenderSettings mono = s;
            mono.use_blocks = false;
            const ImageRGBA m = render(v, cam, tf, mono);
            CHECK(max_channel_difference(base, m) <= 1);
            CHECK(base.stats.samples_skipped > 0);
            CHECK(m.stats.samples_skipped == 0);
        }
    }
}

TEST_CASE("block decomposition matches the monolithic render")
{
    const ScalarVolume v = generate_phantom(PhantomKind::torso, {96, 96, 96});
    const Camera cam = orbit_camera(center_of(v), 220, 300, 30, 64, 64);
    for (const Interpolation mode : {Interpolation::trilinear, Interpolation::tricubic}) {
        for (const ClassificationMode cls : {ClassificationMode::post, ClassificationMode::preintegrated}) {
            RenderSettings s;
            s.interpolation = mode;
            s.classification = cls;
            s.block_size = 32;
            RenderSettings mono = s;
            mono.use_blocks = false;
            const ImageRGBA a = render(v, cam, TransferFunction::preset("bone"), s);
            const ImageRGBA b = render(v, cam, TransferFunction::preset("bone"), mono);
            CHECK(max_channel_difference(a, b) <= (mode == Interpolation::trilinear ? 1 : 2));
        }
    }
}

TEST_CASE("golden torso render")
{
    const auto req = render_request_from_json(testsupport::read_json(testsupport::data_path("request_torso.json")));
    const ScalarVolume v = generate_phantom(PhantomKind::torso, {128, 128, 128});
    const auto png = render_png(v, req, {});
    const auto golden = voxelcast::read_file(testsupport::data_path("golden_torso_bone.png"));
    CHECK(png == golden);
}
