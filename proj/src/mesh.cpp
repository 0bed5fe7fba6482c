#include "voxelcast/mesh.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>

namespace voxelcast {

namespace {

Vec3 triangle_normal(const TriangleMesh& m, const Triangle& t)
{
    return cross(m.vertices[t[1]] - m.vertices[t[0]], m.vertices[t[2]] - m.vertices[t[0]]);
}

/// Merges vertices with bit-identical coordinates.
class VertexMerger {
public:
    explicit VertexMerger(TriangleMesh& mesh)
        : mesh_(mesh)
    {
    }

    std::uint32_t add(Vec3 v)
    {
        const auto [it, inserted] = ids_.try_emplace(std::array<double, 3>{v.x, v.y, v.z}, 0);
        if (inserted) {
            it->second = static_cast<std::uint32_t>(mesh_.vertices.size());
            mesh_.vertices.push_back(v);
        }
        return it->second;
    }

private:
    TriangleMesh& mesh_;
    std::map<std::array<double, 3>, std::uint32_t> ids_;
};

}  // namespace

void TriangleMesh::validate() const
{
    if (vertices.empty() || triangles.size() < 4) {
        throw Error(ErrorCode::InvalidMesh, "mesh needs at least four triangles");
    }
    for (const Vec3& v : vertices) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
            throw Error(ErrorCode::InvalidMesh, "non-finite vertex coordinate");
        }
    }
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(triangles.size() * 3);
    const auto key = [](std::uint32_t a, std::uint32_t b) { return (std::uint64_t(a) << 32) | b; };
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        const Triangle& t = triangles[i];
        for (const std::uint32_t v : t) {
            if (v >= vertices.size()) {
                throw Error(ErrorCode::InvalidMesh, "triangle " + std::to_string(i) + " references a missing vertex");
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw Error(ErrorCode::InvalidMesh, "triangle " + std::to_string(i) + " repeats a vertex");
        }
        const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        const double scale = std::max(dot(e1, e1), dot(e2, e2));
        if (!(length(cross(e1, e2)) > 1e-12 * scale)) {
            throw Error(ErrorCode::InvalidMesh, "triangle " + std::to_string(i) + " is degenerate");
        }
        for (int e = 0; e < 3; ++e) {
            if (++directed[key(t[e], t[(e + 1) % 3])] > 1) {
                throw Error(ErrorCode::InvalidMesh, "edge used twice in the same direction (non-manifold or inconsistent orientation)");
            }
        }
    }
    for (const auto& [k, n] : directed) {
        const auto a = static_cast<std::uint32_t>(k >> 32);
        const auto b = static_cast<std::uint32_t>(k & 0xffffffffu);
        if (!directed.contains(key(b, a))) {
            throw Error(ErrorCode::InvalidMesh, "mesh is not closed");
        }
    }
    if (!(volume() > 0.0)) {
        throw Error(ErrorCode::InvalidMesh, "triangles are oriented inwards");
    }
}

double TriangleMesh::triangle_area(std::size_t i) const
{
    return 0.5 * length(triangle_normal(*this, triangles[i]));
}

double TriangleMesh::area() const
{
    double total = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i) total += triangle_area(i);
    return total;
}

double TriangleMesh::volume() const
{
    double total = 0.0;
    for (const Triangle& t : triangles) {
        total += dot(vertices[t[0]], cross(vertices[t[1]], vertices[t[2]]));
    }
    return total / 6.0;
}

Vec3 TriangleMesh::centroid(std::size_t i) const
{
    const Triangle& t = triangles[i];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

TriangleMesh scaled(const TriangleMesh& mesh, double factor, Vec3 about)
{
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v = about + (v - about) * factor;
    return out;
}

TriangleMesh make_icosphere(double radius, int subdivisions, Vec3 center)
{
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> unit = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                              {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    for (Vec3& v : unit) v = normalize(v);
    std::vector<Triangle> faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                   {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                                   {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
        const auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            const auto [it, inserted] = midpoints.try_emplace(key, 0);
            if (inserted) {
                it->second = static_cast<std::uint32_t>(unit.size());
                unit.push_back(normalize(unit[a] + unit[b]));
            }
            return it->second;
        };
        std::vector<Triangle> next;
        next.reserve(faces.size() * 4);
        for (const Triangle& f : faces) {
            const std::uint32_t ab = midpoint(f[0], f[1]);
            const std::uint32_t bc = midpoint(f[1], f[2]);
            const std::uint32_t ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriangleMesh mesh;
    mesh.vertices.reserve(unit.size());
    for (const Vec3& v : unit) mesh.vertices.push_back(center + v * radius);
    mesh.triangles = std::move(faces);
    for (Triangle& t : mesh.triangles) {
        if (dot(triangle_normal(mesh, t), mesh.centroid(&t - mesh.triangles.data()) - center) < 0.0) {
            std::swap(t[1], t[2]);
        }
    }
    return mesh;
}

TriangleMesh make_box(Vec3 lo, Vec3 hi, double cell)
{
    if (!(cell > 0.0) || !(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z)) {
        throw Error(ErrorCode::InvalidMesh, "box needs hi > lo and a positive cell size");
    }
    std::array<int, 3> n{};
    for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::ceil((hi[a] - lo[a]) / cell)));
    const auto coordinate = [&](int a, int i) { return i == n[a] ? hi[a] : lo[a] + (hi[a] - lo[a]) * i / n[a]; };

    TriangleMesh mesh;
    VertexMerger merger(mesh);
    for (int a = 0; a < 3; ++a) {
        const int u = (a + 1) % 3;
        const int v = (a + 2) % 3;
        for (const int side : {0, n[a]}) {
            Vec3 outward{};
            outward[a] = side == 0 ? -1.0 : 1.0;
            for (int i = 0; i < n[u]; ++i) {
                for (int j = 0; j < n[v]; ++j) {
                    std::array<std::uint32_t, 4> q{};
                    const int di[4] = {0, 1, 1, 0};
                    const int dj[4] = {0, 0, 1, 1};
                    for (int c = 0; c < 4; ++c) {
                        Vec3 p{};
                        p[a] = coordinate(a, side);
                        p[u] = coordinate(u, i + di[c]);
                        p[v] = coordinate(v, j + dj[c]);
                        q[c] = merger.add(p);
                    }
                    for (Triangle t : {Triangle{q[0], q[1], q[2]}, Triangle{q[0], q[2], q[3]}}) {
                        if (dot(triangle_normal(mesh, t), outward) < 0.0) std::swap(t[1], t[2]);
                        mesh.triangles.push_back(t);
                    }
                }
            }
        }
    }
    return mesh;
}

std::optional<MeshFormat> mesh_format_from_path(const std::string& path)
{
    const auto dot_pos = path.find_last_of('.');
    if (dot_pos == std::string::npos) return std::nullopt;
    std::string ext = path.substr(dot_pos + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "stl") return MeshFormat::stl;
    if (ext == "off") return MeshFormat::off;
    if (ext == "ply") return MeshFormat::ply;
    return std::nullopt;
}

namespace {

double parse_number(std::string_view token, const char* what)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::MalformedMesh, std::string("bad ") + what + " '" + std::string(token) + "'");
    }
    return v;
}

class Tokens {
public:
    explicit Tokens(std::string_view text)
        : text_(text)
    {
    }

    /// Next whitespace-separated token; `#` starts a comment when enabled.
    std::optional<std::string_view> next()
    {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ < text_.size() && comments && text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
                continue;
            }
            break;
        }
        if (pos_ >= text_.size()) return std::nullopt;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    std::string_view require(const char* what)
    {
        const auto t = next();
        if (!t) throw Error(ErrorCode::MalformedMesh, std::string("unexpected end of file, expected ") + what);
        return *t;
    }

    bool comments = false;

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

TriangleMesh parse_stl_binary(std::span<const std::uint8_t> bytes)
{
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    TriangleMesh mesh;
    VertexMerger merger(mesh);
    for (std::uint32_t f = 0; f < count; ++f) {
        const std::uint8_t* rec = bytes.data() + 84 + std::size_t(f) * 50;
        Triangle t{};
        for (int v = 0; v < 3; ++v) {
            float c[3];
            std::memcpy(c, rec + 12 + v * 12, 12);
            t[v] = merger.add({c[0], c[1], c[2]});
        }
        mesh.triangles.push_back(t);
    }
    return mesh;
}

TriangleMesh parse_stl_ascii(std::string_view text)
{
    Tokens tokens(text);
    TriangleMesh mesh;
    VertexMerger merger(mesh);
    std::vector<std::uint32_t> loop;
    while (const auto tok = tokens.next()) {
        if (*tok == "vertex") {
            Vec3 v;
            for (int a = 0; a < 3; ++a) v[a] = parse_number(tokens.require("coordinate"), "coordinate");
            loop.push_back(merger.add(v));
        } else if (*tok == "endloop") {
            if (loop.size() != 3) throw Error(ErrorCode::MalformedMesh, "facet loop must have three vertices");
            mesh.triangles.push_back({loop[0], loop[1], loop[2]});
            loop.clear();
        }
    }
    if (mesh.triangles.empty()) throw Error(ErrorCode::MalformedMesh, "no facets found");
    return mesh;
}

}  // namespace

TriangleMesh parse_stl(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() >= 84) {
        std::uint32_t count = 0;
        std::memcpy(&count, bytes.data() + 80, 4);
        if (84 + std::uint64_t(count) * 50 == bytes.size()) {
            return parse_stl_binary(bytes);
        }
    }
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (text.substr(0, 5) != "solid") {
        throw Error(ErrorCode::MalformedMesh, "neither binary nor ASCII STL");
    }
    return parse_stl_ascii(text);
}

TriangleMesh parse_off(std::string_view text)
{
    Tokens tokens(text);
    tokens.comments = true;
    if (tokens.require("header") != "OFF") throw Error(ErrorCode::MalformedMesh, "missing OFF header");
    const auto nv = static_cast<long>(parse_number(tokens.require("vertex count"), "vertex count"));
    const auto nf = static_cast<long>(parse_number(tokens.require("face count"), "face count"));
    parse_number(tokens.require("edge count"), "edge count");
    if (nv < 0 || nf < 0) throw Error(ErrorCode::MalformedMesh, "negative element count");
    TriangleMesh mesh;
    std::vector<std::uint32_t> remap(nv);
    VertexMerger merger(mesh);
    for (long i = 0; i < nv; ++i) {
        Vec3 v;
        for (int a = 0; a < 3; ++a) v[a] = parse_number(tokens.require("coordinate"), "coordinate");
        remap[i] = merger.add(v);
    }
    for (long f = 0; f < nf; ++f) {
        const auto n = static_cast<long>(parse_number(tokens.require("face size"), "face size"));
        if (n < 3) throw Error(ErrorCode::MalformedMesh, "face with fewer than three vertices");
        std::vector<std::uint32_t> poly(n);
        for (long i = 0; i < n; ++i) {
            const auto idx = static_cast<long>(parse_number(tokens.require("vertex index"), "vertex index"));
            if (idx < 0 || idx >= nv) throw Error(ErrorCode::MalformedMesh, "vertex index out of range");
            poly[i] = remap[idx];
        }
        for (long i = 1; i + 1 < n; ++i) mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
    return mesh;
}

TriangleMesh read_mesh(const std::string& path)
{
    const auto format = mesh_format_from_path(path);
    if (!format || *format == MeshFormat::ply) {
        throw Error(ErrorCode::MalformedMesh, "unsupported mesh file '" + path + "' (expected .stl or .off)");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (*format == MeshFormat::stl) return parse_stl(bytes);
    return parse_off(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> write_stl_binary(const TriangleMesh& mesh)
{
    std::vector<std::uint8_t> out(84 + mesh.triangles.size() * 50, 0);
    const char header[] = "binary STL";
    std::memcpy(out.data(), header, sizeof(header) - 1);
    const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
    std::memcpy(out.data() + 80, &count, 4);
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        std::uint8_t* rec = out.data() + 84 + i * 50;
        const Vec3 n = normalize(triangle_normal(mesh, mesh.triangles[i]));
        const float fn[3] = {float(n.x), float(n.y), float(n.z)};
        std::memcpy(rec, fn, 12);
        for (int v = 0; v < 3; ++v) {
            const Vec3 p = mesh.vertices[mesh.triangles[i][v]];
            const float fp[3] = {float(p.x), float(p.y), float(p.z)};
            std::memcpy(rec + 12 + v * 12, fp, 12);
        }
    }
    return out;
}

std::string write_off(const TriangleMesh& mesh)
{
    std::ostringstream out;
    out.precision(17);
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
    for (const Vec3& v : mesh.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const Triangle& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    return out.str();
}

std::string write_ply(const TriangleMesh& mesh, std::span<const double> values, const std::string& property)
{
    if (values.size() != mesh.vertices.size()) {
        throw Error(ErrorCode::InvalidMesh, "one value per vertex required");
    }
    std::ostringstream out;
    out.precision(9);
    out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
        << "\nproperty float x\nproperty float y\nproperty float z\nproperty float " << property << "\nelement face "
        << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        out << v.x << ' ' << v.y << ' ' << v.z << ' ';
        if (std::isnan(values[i])) {
            out << "nan";
        } else {
            out << values[i];
        }
        out << '\n';
    }
    for (const Triangle& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    return out.str();
}

}  // namespace voxelcast
