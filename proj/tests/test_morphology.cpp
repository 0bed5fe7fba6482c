#include "voxelcast/error.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/mesh.hpp"
#include "voxelcast/morphology.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

using namespace voxelcast;

namespace {

constexpr double kPi = std::numbers::pi;

double svr_stderr(const SvrResult& r)
{
    const double s = r.area.value;
    const double v = r.volume.value;
    return *r.svr * std::hypot(r.area.standard_error / s, r.volume.standard_error / v);
}

SvrQuery query(Vec3 c, double r, int spt, int vs, std::uint64_t seed)
{
    SvrQuery q;
    q.center = c;
    q.radius = r;
    q.samples_per_triangle = spt;
    q.volume_samples = vs;
    q.seed = seed;
    return q;
}

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("mesh construction")
{
    const TriangleMesh sphere = make_icosphere(2.0, 3);
    CHECK(sphere.vertices.size() == 642);
    CHECK(sphere.triangles.size() == 1280);
    CHECK_NOTHROW(sphere.validate());
    CHECK(sphere.volume() == doctest::Approx(4.0 / 3.0 * kPi * 8).epsilon(0.02));

    const TriangleMesh box = make_box({0, 0, 0}, {2, 3, 4}, 1.0);
    CHECK_NOTHROW(box.validate());
    CHECK(box.area() == doctest::Approx(2 * (6 + 8 + 12)));
    CHECK(box.volume() == doctest::Approx(24.0));
    CHECK(scaled(box, 2.0).volume() == doctest::Approx(192.0));
}

TEST_CASE("mesh validation")
{
    const TriangleMesh box = make_box({0, 0, 0}, {1, 1, 1}, 1.0);
    TriangleMesh open = box;
    open.triangles.pop_back();
    CHECK(code_of([&] { open.validate(); }) == ErrorCode::InvalidMesh);
    TriangleMesh inverted = box;
    for (Triangle& t : inverted.triangles) std::swap(t[1], t[2]);
    CHECK(code_of([&] { inverted.validate(); }) == ErrorCode::InvalidMesh);
    TriangleMesh degenerate = box;
    degenerate.triangles[0][1] = degenerate.triangles[0][0];
    CHECK(code_of([&] { degenerate.validate(); }) == ErrorCode::InvalidMesh);
    CHECK(code_of([&] { MeshIndex{open}; }) == ErrorCode::InvalidMesh);
}

TEST_CASE("mesh file formats")
{
    const TriangleMesh mesh = make_icosphere(1.5, 1, {1, 2, 3});
    const auto stl = write_stl_binary(mesh);
    CHECK(stl.size() == 84 + 50 * mesh.triangles.size());
    const TriangleMesh from_stl = parse_stl(stl);
    CHECK(from_stl.triangles.size() == mesh.triangles.size());
    CHECK(from_stl.vertices.size() == mesh.vertices.size());
    CHECK(from_stl.volume() == doctest::Approx(mesh.volume()).epsilon(1e-6));
    CHECK_NOTHROW(from_stl.validate());

    const TriangleMesh from_off = parse_off(write_off(mesh));
    CHECK(from_off.vertices.size() == mesh.vertices.size());
    CHECK(from_off.triangles == mesh.triangles);

    const std::string ascii = "solid t\n"
                              "facet normal 0 0 -1\n outer loop\n  vertex 0 0 0\n  vertex 0 1 0\n  vertex 1 0 0\n endloop\nendfacet\n"
                              "facet normal 0 -1 0\n outer loop\n  vertex 0 0 0\n  vertex 1 0 0\n  vertex 0 0 1\n endloop\nendfacet\n"
                              "facet normal -1 0 0\n outer loop\n  vertex 0 0 0\n  vertex 0 0 1\n  vertex 0 1 0\n endloop\nendfacet\n"
                              "facet normal 1 1 1\n outer loop\n  vertex 1 0 0\n  vertex 0 1 0\n  vertex 0 0 1\n endloop\nendfacet\n"
                              "endsolid t\n";
    const TriangleMesh tet = parse_stl(std::span(reinterpret_cast<const std::uint8_t*>(ascii.data()), ascii.size()));
    CHECK(tet.vertices.size() == 4);
    CHECK(tet.volume() == doctest::Approx(1.0 / 6.0));

    // Quad faces are split into triangles.
    const TriangleMesh cube = parse_off("OFF\n# unit cube\n8 6 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n"
                                        "4 0 3 2 1\n4 4 5 6 7\n4 0 1 5 4\n4 2 3 7 6\n4 1 2 6 5\n4 0 4 7 3\n");
    CHECK(cube.triangles.size() == 12);
    CHECK(cube.volume() == doctest::Approx(1.0));

    CHECK(code_of([] { parse_off("OFF\n3 1 0\n0 0 0\n"); }) == ErrorCode::MalformedMesh);
    CHECK(code_of([] { parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"); }) == ErrorCode::MalformedMesh);
    CHECK(mesh_format_from_path("a/b.STL") == MeshFormat::stl);
    CHECK_FALSE(mesh_format_from_path("mesh.obj").has_value());

    std::vector<double> values(mesh.vertices.size(), 1.0);
    values[0] = std::nan("");
    const std::string ply = write_ply(mesh, values);
    CHECK(ply.find("property float svr") != std::string::npos);
    CHECK(ply.find("element vertex " + std::to_string(mesh.vertices.size())) != std::string::npos);
    CHECK(ply.find("nan") != std::string::npos);

    testsupport::TempDir dir;
    const auto path = dir.path() / "sphere.stl";
    write_file_atomic(path, stl);
    CHECK(read_mesh(path.string()).triangles.size() == mesh.triangles.size());
}

TEST_CASE("clipped surface area")
{
    const MeshIndex sphere(make_icosphere(1.0, 2));
    const double total = sphere.mesh().area();
    const Estimate all = clipped_area(sphere, query({0, 0, 0}, 5.0, 16, 100, 1));
    CHECK(all.value == doctest::Approx(total).epsilon(1e-12));
    CHECK(all.standard_error == 0.0);
    const Estimate none = clipped_area(sphere, query({0, 0, 0}, 0.5, 16, 100, 1));
    CHECK(none.value == 0.0);
    CHECK(none.standard_error == 0.0);

    // Top face of the box is the unit square split into two triangles; the
    // other faces stay outside the probe.
    const MeshIndex square(make_box({-0.5, -0.5, -1.0}, {0.5, 0.5, 0.0}, 1.0));
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) mean += clipped_area(square, query({0, 0, 0}, 0.4, 256, 100, seed)).value / 10;
    CHECK(mean == doctest::Approx(kPi * 0.16).epsilon(0.02));
}

TEST_CASE("clipped volume")
{
    const MeshIndex cube(make_box({-10, -10, -10}, {10, 10, 10}, 5.0));
    const Estimate inside = clipped_volume(cube, query({1, 2, 3}, 2.0, 16, 100000, 4));
    CHECK(inside.value == doctest::Approx(4.0 / 3.0 * kPi * 8).epsilon(0.01));
    CHECK(clipped_volume(cube, query({30, 0, 0}, 2.0, 16, 1000, 4)).value == 0.0);

    const MeshIndex slab(make_box({-10, -10, -5}, {10, 10, 0}, 2.0));
    const Estimate half = clipped_volume(slab, query({0.3, -0.2, 0}, 1.0, 16, 100000, 5));
    CHECK(half.value == doctest::Approx(2.0 / 3.0 * kPi).epsilon(0.02));
}

TEST_CASE("SVR oracles")
{
    const auto oracle = testsupport::read_json(testsupport::data_path("svr_oracles.json"));
    {
        const double r = oracle["flat_face"]["radius"];
        const MeshIndex slab(make_box({-10, -10, -10}, {10, 10, 0}, 2.0));
        const SvrResult res = svr_at_point(slab, query({0.1, 0.2, 0}, r, 256, 100000, 1));
        REQUIRE(res.svr.has_value());
        CHECK(*res.svr == doctest::Approx(oracle["flat_face"]["svr"].get<double>()).epsilon(0.03));
        CHECK(*res.svr == doctest::Approx(3.0 / (2.0 * r)).epsilon(0.03));
    }
    {
        const double a = oracle["enclosing"]["sphere_radius"];
        const double r = oracle["enclosing"]["radius"];
        const MeshIndex sphere(make_icosphere(a, 4));
        const SvrResult res = svr_at_point(sphere, query({0, 0, 0}, r, 64, 1000, 2));
        REQUIRE(res.svr.has_value());
        CHECK(*res.svr == doctest::Approx(oracle["enclosing"]["svr"].get<double>()).epsilon(0.03));
    }
    {
        const MeshIndex sphere(make_icosphere(1.0, 2));
        const SvrResult res = svr_at_point(sphere, query({5, 0, 0}, 1.0, 64, 1000, 3));
        CHECK_FALSE(res.svr.has_value());
    }
}

TEST_CASE("SVR field on a sphere matches the cap formula")
{
    const auto oracle = testsupport::read_json(testsupport::data_path("svr_oracles.json"));
    const double a = oracle["cap"]["sphere_radius"];
    const MeshIndex sphere(make_icosphere(a, 2));
    SvrParams p;
    p.radius = oracle["cap"]["radius"];
    p.samples_per_triangle = 64;
    p.volume_samples = 20000;
    p.seed = 17;
    const auto field = svr_field(sphere, p);
    CHECK(field.size() == sphere.mesh().vertices.size());
    double mean = 0.0;
    for (const auto& pt : field) {
        REQUIRE(pt.result.svr.has_value());
        mean += *pt.result.svr / double(field.size());
    }
    CHECK(mean == doctest::Approx(oracle["cap"]["svr"].get<double>()).epsilon(0.05));
    for (const auto& pt : field) CHECK(std::abs(*pt.result.svr - mean) < 6.0 * svr_stderr(pt.result) + 0.05 * mean);

    p.centroids = true;
    CHECK(svr_field(sphere, p).size() == sphere.mesh().triangles.size());

    std::istringstream csv(svr_csv(field));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == int(field.size()) + 1);
}

TEST_CASE("Monte Carlo behaviour")
{
    const MeshIndex sphere(make_icosphere(3.0, 1));
    SvrParams p;
    p.radius = 1.5;
    p.samples_per_triangle = 128;
    p.volume_samples = 4000;
    p.seed = 5;
    const auto one = svr_field(sphere, p);
    SUBCASE("determinism across thread counts")
    {
        p.threads = 3;
        const auto again = svr_field(sphere, p);
        for (std::size_t i = 0; i < one.size(); ++i) CHECK(*again[i].result.svr == *one[i].result.svr);
    }
    SUBCASE("doubling samples shrinks the standard error by sqrt 2")
    {
        p.samples_per_triangle *= 2;
        p.volume_samples *= 2;
        const auto two = svr_field(sphere, p);
        double s1 = 0, s2 = 0, v1 = 0, v2 = 0;
        for (std::size_t i = 0; i < one.size(); ++i) {
            s1 += one[i].result.area.standard_error;
            s2 += two[i].result.area.standard_error;
            v1 += one[i].result.volume.standard_error;
            v2 += two[i].result.volume.standard_error;
        }
        CHECK(s2 / s1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.15));
        CHECK(v2 / v1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.15));
    }
    SUBCASE("tripling samples stays within five standard errors")
    {
        const MeshIndex slab(make_box({-10, -10, -10}, {10, 10, 0}, 2.0));
        const SvrResult base = svr_at_point(slab, query({0, 0, 0}, 2.0, 64, 10000, 8));
        const SvrResult more = svr_at_point(slab, query({0, 0, 0}, 2.0, 192, 30000, 9));
        CHECK(std::abs(*base.svr - *more.svr) <= 5.0 * std::hypot(svr_stderr(base), svr_stderr(more)));
    }
}

TEST_CASE("scale covariance")
{
    const TriangleMesh mesh = make_icosphere(3.0, 2);
    const MeshIndex small(mesh);
    const double k = 2.5;
    const MeshIndex big(scaled(mesh, k));
    const Vec3 x = mesh.vertices[7];
    const SvrResult a = svr_at_point(small, query(x, 0.9, 128, 20000, 21));
    const SvrResult b = svr_at_point(big, query(x * k, 0.9 * k, 128, 20000, 22));
    CHECK(std::abs(*a.svr - *b.svr * k) <= 3.0 * std::hypot(svr_stderr(a), k * svr_stderr(b)));
}

TEST_CASE("query validation")
{
    const MeshIndex sphere(make_icosphere(1.0, 1));
    CHECK(code_of([&] { clipped_area(sphere, query({0, 0, 0}, 0.0, 16, 100, 1)); }) == ErrorCode::InvalidRequest);
    CHECK(code_of([&] { clipped_volume(sphere, query({0, 0, 0}, 1.0, 16, 0, 1)); }) == ErrorCode::InvalidRequest);
}
