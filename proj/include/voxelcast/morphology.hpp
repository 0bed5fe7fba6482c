#pragma once

#include "voxelcast/mesh.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace voxelcast {

/// Bounding-volume hierarchy over a mesh. Owns a copy of the mesh.
class MeshIndex {
public:
    explicit MeshIndex(TriangleMesh mesh);

    const TriangleMesh& mesh() const noexcept { return mesh_; }

    /// Triangles whose bounding boxes intersect the ball (superset of those touching it).
    void candidates(Vec3 center, double radius, std::vector<std::uint32_t>& out) const;

    enum class Crossing { ok, degenerate };
    /// Counts crossings of origin + t*dir for t in (0, t_max). Grazing hits on
    /// edges or vertices, coplanar triangles and an origin on the surface are
    /// reported as degenerate.
    Crossing count_crossings(Vec3 origin, Vec3 dir, double t_max, int& count) const;

private:
    struct Node {
        Vec3 lo;
        Vec3 hi;
        std::uint32_t first = 0;  // leaf: first triangle in order_; inner: right child
        std::uint32_t count = 0;  // 0 for inner nodes
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);

    TriangleMesh mesh_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::vector<Vec3> centroids_;
    double eps_ = 0.0;
};

struct SvrQuery {
    Vec3 center;
    double radius = 1.0;
    int samples_per_triangle = 256;
    int volume_samples = 100000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Area of the mesh surface inside the ball.
Estimate clipped_area(const MeshIndex& index, const SvrQuery& query);
/// Volume of the ball inside the mesh.
Estimate clipped_volume(const MeshIndex& index, const SvrQuery& query);

struct SvrResult {
    std::optional<double> svr;  // nothing when undefined
    Estimate area;
    Estimate volume;
};

/// SVR = S / V; undefined when the volume estimate is zero.
SvrResult svr_at_point(const MeshIndex& index, const SvrQuery& query);

struct SvrParams {
    double radius = 1.0;
    int samples_per_triangle = 256;
    int volume_samples = 100000;
    std::uint64_t seed = 0;
    /// Query triangle centroids instead of vertices.
    bool centroids = false;
    unsigned threads = 0;
};

struct SvrPoint {
    Vec3 position;
    SvrResult result;
};

/// Per-point seeds are derived from params.seed and the point index.
std::vector<SvrPoint> svr_field(const MeshIndex& index, const SvrParams& params);

/// Columns: index,x,y,z,svr,stderr_s,stderr_v; undefined values are empty.
std::string svr_csv(const std::vector<SvrPoint>& field);

/// Seed for point `index` of a field evaluated with `seed`.
std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace voxelcast
