#pragma once

#include "voxelcast/vec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace voxelcast {

using Triangle = std::array<std::uint32_t, 3>;

/// Closed triangle surface in mm, outward (counter-clockwise) orientation.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;

    /// Throws InvalidMesh unless closed, manifold, consistently oriented,
    /// free of degenerate triangles and enclosing a positive volume.
    void validate() const;

    double area() const;
    /// Signed enclosed volume (positive for outward orientation).
    double volume() const;
    Vec3 centroid(std::size_t triangle) const;
    double triangle_area(std::size_t triangle) const;
};

TriangleMesh scaled(const TriangleMesh& mesh, double factor, Vec3 about = {});

/// Icosahedron subdivided `subdivisions` times, projected onto the sphere.
TriangleMesh make_icosphere(double radius, int subdivisions, Vec3 center = {});
/// Axis-aligned box [lo, hi] with each face split into cells of at most `cell` mm.
TriangleMesh make_box(Vec3 lo, Vec3 hi, double cell);

enum class MeshFormat { stl, off, ply };

/// Format from the file extension (.stl, .off, .ply); nothing when unknown.
std::optional<MeshFormat> mesh_format_from_path(const std::string& path);

/// ASCII or binary STL; vertices with identical coordinates are merged.
TriangleMesh parse_stl(std::span<const std::uint8_t> bytes);
TriangleMesh parse_off(std::string_view text);
TriangleMesh read_mesh(const std::string& path);

std::vector<std::uint8_t> write_stl_binary(const TriangleMesh& mesh);
std::string write_off(const TriangleMesh& mesh);
/// ASCII PLY with an extra per-vertex float property; NaN marks undefined values.
std::string write_ply(const TriangleMesh& mesh, std::span<const double> vertex_values, const std::string& property = "svr");

}  // namespace voxelcast
