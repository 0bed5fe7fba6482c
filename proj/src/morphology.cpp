#include "voxelcast/morphology.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace voxelcast {

namespace {

constexpr std::uint32_t kLeafSize = 4;
constexpr double kBarycentricEps = 1e-9;
constexpr int kMaxRayAttempts = 16;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(seed ^ splitmix64(stream)))
    {
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    Vec3 in_ball(Vec3 center, double radius)
    {
        for (;;) {
            const Vec3 d{2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0};
            if (dot(d, d) <= 1.0) return center + d * radius;
        }
    }

    Vec3 direction()
    {
        for (;;) {
            const Vec3 d{2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0};
            const double l2 = dot(d, d);
            if (l2 > 1e-6 && l2 <= 1.0) return d / std::sqrt(l2);
        }
    }

private:
    std::mt19937_64 engine_;
};

Vec3 min3(Vec3 a, Vec3 b) { return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)}; }
Vec3 max3(Vec3 a, Vec3 b) { return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}; }

double box_distance_squared(Vec3 p, Vec3 lo, Vec3 hi)
{
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double v = p[a] < lo[a] ? lo[a] - p[a] : (p[a] > hi[a] ? p[a] - hi[a] : 0.0);
        d += v * v;
    }
    return d;
}

/// Closest point on triangle abc to p.
Vec3 closest_point(Vec3 p, Vec3 a, Vec3 b, Vec3 c)
{
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = dot(ab, ap);
    const double d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp);
    const double d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp);
    const double d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double ball_volume(double r)
{
    return 4.0 / 3.0 * std::numbers::pi * r * r * r;
}

}  // namespace

// ---------------------------------------------------------------------------
// MeshIndex

MeshIndex::MeshIndex(TriangleMesh mesh)
    : mesh_(std::move(mesh))
{
    mesh_.validate();
    const std::size_t n = mesh_.triangles.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.resize(n);
    Vec3 lo = mesh_.vertices.front();
    Vec3 hi = lo;
    for (const Vec3& v : mesh_.vertices) {
        lo = min3(lo, v);
        hi = max3(hi, v);
    }
    eps_ = 1e-9 * std::max(length(hi - lo), 1e-300);
    for (std::size_t i = 0; i < n; ++i) centroids_[i] = mesh_.centroid(i);
    nodes_.reserve(2 * n / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(n));
}

std::uint32_t MeshIndex::build(std::uint32_t begin, std::uint32_t end)
{
    const auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Vec3 hi = lo * -1.0;
    Vec3 clo = lo;
    Vec3 chi = hi;
    for (std::uint32_t i = begin; i < end; ++i) {
        for (const std::uint32_t v : mesh_.triangles[order_[i]]) {
            lo = min3(lo, mesh_.vertices[v]);
            hi = max3(hi, mesh_.vertices[v]);
        }
        clo = min3(clo, centroids_[order_[i]]);
        chi = max3(chi, centroids_[order_[i]]);
    }
    const Vec3 pad{eps_, eps_, eps_};
    nodes_[self].lo = lo - pad;
    nodes_[self].hi = hi + pad;
    if (end - begin <= kLeafSize) {
        nodes_[self].first = begin;
        nodes_[self].count = end - begin;
        return self;
    }
    const Vec3 span = chi - clo;
    const int axis = span.x >= span.y && span.x >= span.z ? 0 : (span.y >= span.z ? 1 : 2);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return centroids_[a][axis] < centroids_[b][axis]; });
    build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[self].first = right;
    nodes_[self].count = 0;
    return self;
}

void MeshIndex::candidates(Vec3 center, double radius, std::vector<std::uint32_t>& out) const
{
    out.clear();
    const double r2 = radius * radius;
    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const std::uint32_t n = stack[--top];
        const Node& node = nodes_[n];
        if (box_distance_squared(center, node.lo, node.hi) > r2) continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) out.push_back(order_[i]);
        } else {
            stack[top++] = node.first;
            stack[top++] = n + 1;
        }
    }
}

MeshIndex::Crossing MeshIndex::count_crossings(Vec3 origin, Vec3 dir, double t_max, int& count) const
{
    count = 0;
    const double dir_len = length(dir);
    const double t_eps = eps_ / dir_len;
    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const std::uint32_t n = stack[--top];
        const Node& node = nodes_[n];
        double t0 = 0.0;
        double t1 = t_max;
        bool miss = false;
        for (int a = 0; a < 3 && !miss; ++a) {
            if (dir[a] == 0.0) {
                miss = origin[a] < node.lo[a] || origin[a] > node.hi[a];
                continue;
            }
            double ta = (node.lo[a] - origin[a]) / dir[a];
            double tb = (node.hi[a] - origin[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            miss = t0 > t1 + t_eps;
        }
        if (miss) continue;
        if (node.count == 0) {
            stack[top++] = node.first;
            stack[top++] = n + 1;
            continue;
        }
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
            const Triangle& tri = mesh_.triangles[order_[i]];
            const Vec3 v0 = mesh_.vertices[tri[0]];
            const Vec3 e1 = mesh_.vertices[tri[1]] - v0;
            const Vec3 e2 = mesh_.vertices[tri[2]] - v0;
            const Vec3 pvec = cross(dir, e2);
            const double det = dot(e1, pvec);
            const Vec3 tvec = origin - v0;
            if (std::abs(det) <= 1e-12 * length(e1) * length(e2) * dir_len) {
                // Parallel: only a ray lying in the triangle's plane is a problem.
                const Vec3 normal = normalize(cross(e1, e2));
                if (std::abs(dot(tvec, normal)) <= eps_) return Crossing::degenerate;
                continue;
            }
            const double inv = 1.0 / det;
            const double u = dot(tvec, pvec) * inv;
            if (u < -kBarycentricEps || u > 1.0 + kBarycentricEps) continue;
            const Vec3 qvec = cross(tvec, e1);
            const double v = dot(dir, qvec) * inv;
            if (v < -kBarycentricEps || u + v > 1.0 + kBarycentricEps) continue;
            const double t = dot(e2, qvec) * inv;
            if (t < -t_eps || t > t_max + t_eps) continue;
            if (std::abs(t) <= t_eps || std::abs(t - t_max) <= t_eps) return Crossing::degenerate;
            if (u < kBarycentricEps || v < kBarycentricEps || u + v > 1.0 - kBarycentricEps) return Crossing::degenerate;
            ++count;
        }
    }
    return Crossing::ok;
}

// ---------------------------------------------------------------------------
// Estimators

void SvrQuery::validate() const
{
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorCode::InvalidRequest, "radius must be positive", "radius");
    }
    if (samples_per_triangle < 1) {
        throw Error(ErrorCode::InvalidRequest, "samples_per_triangle must be at least 1", "samples_per_triangle");
    }
    if (volume_samples < 1) {
        throw Error(ErrorCode::InvalidRequest, "volume_samples must be at least 1", "volume_samples");
    }
}

Estimate clipped_area(const MeshIndex& index, const SvrQuery& query)
{
    query.validate();
    const TriangleMesh& mesh = index.mesh();
    const Vec3 x = query.center;
    const double r2 = query.radius * query.radius;
    std::vector<std::uint32_t> cands;
    index.candidates(x, query.radius, cands);
    Rng rng(query.seed, 0);
    const auto inside = [&](Vec3 p) { return dot(p - x, p - x) <= r2; };
    double area = 0.0;
    double variance = 0.0;
    for (const std::uint32_t t : cands) {
        const Triangle& tri = mesh.triangles[t];
        const Vec3 a = mesh.vertices[tri[0]];
        const Vec3 b = mesh.vertices[tri[1]];
        const Vec3 c = mesh.vertices[tri[2]];
        const double full = mesh.triangle_area(t);
        if (inside(a) && inside(b) && inside(c)) {
            area += full;
            continue;
        }
        if (!inside(closest_point(x, a, b, c))) {
            continue;
        }
        const Vec3 e1 = b - a;
        const Vec3 e2 = c - a;
        int hits = 0;
        for (int s = 0; s < query.samples_per_triangle; ++s) {
            double u = rng.uniform();
            double v = rng.uniform();
            if (u + v > 1.0) {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            hits += inside(a + e1 * u + e2 * v);
        }
        const double n = query.samples_per_triangle;
        const double p = hits / n;
        area += full * p;
        variance += full * full * p * (1.0 - p) / n;
    }
    return {area, std::sqrt(variance)};
}

namespace {

bool inside_by_ray(const MeshIndex& index, Vec3 p, Rng& rng)
{
    Vec3 dir{1.0, 0.0, 0.0};
    int count = 0;
    for (int attempt = 0; attempt < kMaxRayAttempts; ++attempt) {
        if (index.count_crossings(p, dir, std::numeric_limits<double>::infinity(), count) == MeshIndex::Crossing::ok) {
            break;
        }
        dir = rng.direction();
    }
    return count % 2 == 1;
}

}  // namespace

Estimate clipped_volume(const MeshIndex& index, const SvrQuery& query)
{
    query.validate();
    const TriangleMesh& mesh = index.mesh();
    const Vec3 x = query.center;
    const double r = query.radius;
    const double ball = ball_volume(r);
    Rng rng(query.seed, 1);

    std::vector<std::uint32_t> cands;
    index.candidates(x, r, cands);
    const bool boundary_in_ball = std::any_of(cands.begin(), cands.end(), [&](std::uint32_t t) {
        const Triangle& tri = mesh.triangles[t];
        const Vec3 q = closest_point(x, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        return dot(q - x, q - x) <= r * r;
    });
    if (!boundary_in_ball) {
        // The ball lies entirely on one side of the surface.
        return {inside_by_ray(index, x, rng) ? ball : 0.0, 0.0};
    }

    // Parity of each sample follows from a reference point and the crossings
    // of the segment between them, which stays inside the ball.
    std::optional<Vec3> reference;
    bool reference_inside = false;
    long hits = 0;
    for (int s = 0; s < query.volume_samples; ++s) {
        const Vec3 p = rng.in_ball(x, r);
        bool in = false;
        int count = 0;
        if (reference && index.count_crossings(*reference, p - *reference, 1.0, count) == MeshIndex::Crossing::ok) {
            in = reference_inside != (count % 2 == 1);
        } else {
            in = inside_by_ray(index, p, rng);
            if (!reference) {
                reference = p;
                reference_inside = in;
            }
        }
        hits += in;
    }
    const double n = query.volume_samples;
    const double p = hits / n;
    return {ball * p, ball * std::sqrt(p * (1.0 - p) / n)};
}

SvrResult svr_at_point(const MeshIndex& index, const SvrQuery& query)
{
    SvrResult result;
    result.area = clipped_area(index, query);
    result.volume = clipped_volume(index, query);
    if (result.volume.value > 0.0 && result.area.value > 0.0) {
        result.svr = result.area.value / result.volume.value;
    }
    return result;
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index)
{
    return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

std::vector<SvrPoint> svr_field(const MeshIndex& index, const SvrParams& params)
{
    const TriangleMesh& mesh = index.mesh();
    std::vector<SvrPoint> field;
    if (params.centroids) {
        field.resize(mesh.triangles.size());
        for (std::size_t i = 0; i < field.size(); ++i) field[i].position = mesh.centroid(i);
    } else {
        field.resize(mesh.vertices.size());
        for (std::size_t i = 0; i < field.size(); ++i) field[i].position = mesh.vertices[i];
    }
    SvrQuery base;
    base.radius = params.radius;
    base.samples_per_triangle = params.samples_per_triangle;
    base.volume_samples = params.volume_samples;
    base.validate();

    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < field.size(); i = next++) {
            SvrQuery q = base;
            q.center = field[i].position;
            q.seed = point_seed(params.seed, i);
            field[i].result = svr_at_point(index, q);
        }
    };
    unsigned workers = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(field.size(), 1)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    return field;
}

std::string svr_csv(const std::vector<SvrPoint>& field)
{
    std::ostringstream out;
    out.precision(10);
    out << "index,x,y,z,svr,stderr_s,stderr_v\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
        const SvrPoint& p = field[i];
        out << i << ',' << p.position.x << ',' << p.position.y << ',' << p.position.z << ',';
        if (p.result.svr) out << *p.result.svr;
        out << ',' << p.result.area.standard_error << ',' << p.result.volume.standard_error << '\n';
    }
    return out.str();
}

}  // namespace voxelcast
