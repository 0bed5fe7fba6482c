#include "voxelcast/raycaster.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace voxelcast {

// ---------------------------------------------------------------------------
// Settings

std::string to_string(RenderMode mode)
{
    return mode == RenderMode::isosurface ? "isosurface" : "dvr";
}

std::string to_string(ClassificationMode mode)
{
    switch (mode) {
    case ClassificationMode::post: return "post";
    case ClassificationMode::pre: return "pre";
    case ClassificationMode::preintegrated: return "preintegrated";
    }
    return "post";
}

void RenderSettings::validate() const
{
    if (step && !(*step > 0.0 && std::isfinite(*step))) {
        throw Error(ErrorCode::InvalidSettings, "step must be positive", "step");
    }
    if (!(early_termination_alpha > 0.0 && early_termination_alpha <= 1.0)) {
        throw Error(ErrorCode::InvalidSettings, "early_termination_alpha must lie in (0, 1]", "early_termination_alpha");
    }
    if (mode == RenderMode::isosurface && !isovalue) {
        throw Error(ErrorCode::InvalidSettings, "isosurface mode needs an isovalue", "isovalue");
    }
    for (const float c : {background.r, background.g, background.b, background.a}) {
        if (!(c >= 0.0f && c <= 1.0f)) {
            throw Error(ErrorCode::InvalidSettings, "background channels must lie in [0,1]", "background");
        }
    }
    if (use_blocks) {
        if (block_size < 8) {
            throw Error(ErrorCode::InvalidSettings, "block_size must be at least 8", "block_size");
        }
        if (overlap < 1 || overlap >= block_size) {
            throw Error(ErrorCode::InvalidSettings, "overlap must lie in [1, block_size)", "overlap");
        }
    }
}

namespace {

template <typename Enum>
Enum enum_field(const nlohmann::json& j, const char* field, Enum fallback, std::initializer_list<std::pair<const char*, Enum>> names)
{
    if (!j.contains(field)) return fallback;
    const std::string value = j.at(field).get<std::string>();
    for (const auto& [name, e] : names) {
        if (value == name) return e;
    }
    throw Error(ErrorCode::InvalidSettings, "unknown value '" + value + "'", field);
}

}  // namespace

RenderSettings render_settings_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidSettings, "settings must be an object", "settings");
    }
    const char* current = "settings";
    try {
        RenderSettings s;
        current = "mode";
        s.mode = enum_field(j, "mode", s.mode, {{"dvr", RenderMode::dvr}, {"isosurface", RenderMode::isosurface}});
        current = "classification";
        s.classification = enum_field(j, "classification", s.classification,
                                      {{"post", ClassificationMode::post},
                                       {"pre", ClassificationMode::pre},
                                       {"preintegrated", ClassificationMode::preintegrated}});
        current = "interpolation";
        s.interpolation = enum_field(j, "interpolation", s.interpolation,
                                     {{"trilinear", Interpolation::trilinear}, {"tricubic", Interpolation::tricubic}});
        current = "step";
        if (j.contains("step") && !j.at("step").is_null()) s.step = j.at("step").get<double>();
        current = "lighting";
        s.lighting = j.value("lighting", s.lighting);
        current = "early_termination_alpha";
        s.early_termination_alpha = j.value("early_termination_alpha", s.early_termination_alpha);
        current = "isovalue";
        if (j.contains("isovalue") && !j.at("isovalue").is_null()) s.isovalue = j.at("isovalue").get<double>();
        current = "background";
        if (j.contains("background")) {
            const auto& bg = j.at("background");
            if (!bg.is_array() || bg.size() != 4) {
                throw Error(ErrorCode::InvalidSettings, "background must be [r, g, b, a]", "background");
            }
            s.background = {bg[0].get<float>(), bg[1].get<float>(), bg[2].get<float>(), bg[3].get<float>()};
        }
        current = "use_blocks";
        s.use_blocks = j.value("use_blocks", s.use_blocks);
        current = "block_size";
        s.block_size = j.value("block_size", s.block_size);
        current = "overlap";
        s.overlap = j.value("overlap", s.overlap);
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSettings, e.what(), current);
    }
}

nlohmann::json to_json(const RenderSettings& s)
{
    nlohmann::json j = {
        {"mode", to_string(s.mode)},
        {"classification", to_string(s.classification)},
        {"interpolation", to_string(s.interpolation)},
        {"lighting", s.lighting},
        {"early_termination_alpha", s.early_termination_alpha},
        {"background", {s.background.r, s.background.g, s.background.b, s.background.a}},
        {"use_blocks", s.use_blocks},
        {"block_size", s.block_size},
        {"overlap", s.overlap},
    };
    j["step"] = s.step ? nlohmann::json(*s.step) : nlohmann::json(nullptr);
    j["isovalue"] = s.isovalue ? nlohmann::json(*s.isovalue) : nlohmann::json(nullptr);
    return j;
}

double reference_step(const ScalarVolume& volume)
{
    const Vec3 s = volume.spacing();
    return 0.5 * std::min({s.x, s.y, s.z});
}

// ---------------------------------------------------------------------------
// Compositing and shading

Rgba composite_step(Rgba accum, Rgba sample, double step, double ref_step)
{
    if (sample.a <= 0.0f) {
        return accum;
    }
    double alpha = std::min(1.0, static_cast<double>(sample.a));
    if (step != ref_step) {
        alpha = 1.0 - std::pow(1.0 - alpha, step / ref_step);
    }
    const auto w = static_cast<float>((1.0 - accum.a) * alpha);
    accum.r += w * sample.r;
    accum.g += w * sample.g;
    accum.b += w * sample.b;
    accum.a += w;
    return accum;
}

Vec3 shade_phong(Vec3 base, Vec3 gradient, Vec3 view_dir, Vec3 light_dir, const PhongParams& params)
{
    const double g = length(gradient);
    if (!(g > 0.0)) {
        return base;
    }
    const Vec3 n = gradient * (-1.0 / g);
    const Vec3 l = normalize(light_dir);
    const Vec3 v = normalize(view_dir);
    const double ndotl = dot(n, l);
    const Vec3 r = n * (2.0 * ndotl) - l;
    const double diffuse = std::max(0.0, ndotl);
    const double specular = ndotl > 0.0 ? params.specular * std::pow(std::max(0.0, dot(r, v)), params.shininess) : 0.0;
    const double factor = params.ambient + params.diffuse * diffuse;
    return {base.x * factor + specular, base.y * factor + specular, base.z * factor + specular};
}

// ---------------------------------------------------------------------------
// Renderer

namespace {

/// Catmull-Rom weights can push a value past its support range by at most
/// this fraction of the range (negative lobe mass of the 3-D kernel).
constexpr double kCubicOvershoot = 0.4765625;

Rgba premultiplied(Rgba8 v)
{
    const float a = v.a / 255.0f;
    return {v.r / 255.0f * a, v.g / 255.0f * a, v.b / 255.0f * a, a};
}

struct Brick {
    std::vector<std::int16_t> scalars;
    std::vector<Rgba8> colors;
    VoxelView<std::int16_t> scalar_view;
    VoxelView<Rgba8> color_view;
    /// DVR: provably transparent. Isosurface: the isovalue is outside the reachable range.
    bool skip = false;
    /// Isosurface mode, skipped bricks: every reachable value is >= isovalue.
    bool above_isovalue = false;
    /// DVR sampling window; samples outside it are provably transparent.
    VoxelBox window;
};

/// Per-cell [min, max] of the interpolation support along one axis, in place.
/// Cell c spans [c, c+1]; its support is {c, c+1} or {c-1, ..., c+2}.
void support_extrema(std::vector<double>& mn, std::vector<double>& mx, std::array<int, 3> extent, int axis, bool cubic)
{
    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(extent[0]),
                                            static_cast<std::size_t>(extent[0]) * extent[1]};
    const int n = extent[axis];
    std::vector<double> line_mn(n);
    std::vector<double> line_mx(n);
    std::array<int, 3> outer = extent;
    outer[axis] = 1;
    for (int c2 = 0; c2 < outer[2]; ++c2) {
        for (int c1 = 0; c1 < outer[1]; ++c1) {
            for (int c0 = 0; c0 < outer[0]; ++c0) {
                const std::size_t base = c0 * stride[0] + c1 * stride[1] + c2 * stride[2];
                for (int i = 0; i < n; ++i) {
                    line_mn[i] = mn[base + i * stride[axis]];
                    line_mx[i] = mx[base + i * stride[axis]];
                }
                for (int c = 0; c < n; ++c) {
                    const int first = cubic ? std::max(c - 1, 0) : c;
                    const int last = std::min(cubic ? c + 2 : c + 1, n - 1);
                    double lo = line_mn[first];
                    double hi = line_mx[first];
                    for (int i = first + 1; i <= last; ++i) {
                        lo = std::min(lo, line_mn[i]);
                        hi = std::max(hi, line_mx[i]);
                    }
                    mn[base + c * stride[axis]] = lo;
                    mx[base + c * stride[axis]] = hi;
                }
            }
        }
    }
}

/// Bounding box (continuous voxel coordinates) of the cells whose reachable
/// values include a visible bin, or nothing when no cell does.
std::optional<VoxelBox> support_window(const std::vector<std::int16_t>& scalars, const Block& block, bool cubic,
                                       const ClassifiedLUT& lut, bool whole_block)
{
    if (whole_block) {
        return block.bounds();
    }
    std::vector<double> mn(scalars.begin(), scalars.end());
    std::vector<double> mx = mn;
    for (int a = 0; a < 3; ++a) support_extrema(mn, mx, block.extent, a, cubic);
    std::array<int, 3> lo{block.extent[0], block.extent[1], block.extent[2]};
    std::array<int, 3> hi{-1, -1, -1};
    std::size_t n = 0;
    for (int k = 0; k < block.extent[2]; ++k) {
        for (int j = 0; j < block.extent[1]; ++j) {
            for (int i = 0; i < block.extent[0]; ++i, ++n) {
                double a = mn[n];
                double b = mx[n];
                if (cubic) {
                    const double margin = kCubicOvershoot * (b - a);
                    a -= margin;
                    b += margin;
                }
                if (lut.max_opacity(a, b) > 0.0f) {
                    lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
                    hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
                }
            }
        }
    }
    if (hi[0] < 0) {
        return std::nullopt;
    }
    VoxelBox box;
    for (int a = 0; a < 3; ++a) {
        box.lo[a] = block.origin[a] + lo[a];
        box.hi[a] = block.origin[a] + std::min(hi[a] + 1, block.extent[a] - 1);
    }
    return box;
}

bool zero_opacity_is_interval(const ClassifiedLUT& lut, ValueRange range, bool cubic)
{
    double lo = range.min;
    double hi = range.max;
    if (cubic) {
        const double margin = kCubicOvershoot * (hi - lo);
        lo -= margin;
        hi += margin;
    }
    int runs = 0;
    bool in_run = false;
    for (int i = lut.bin_index(lo); i <= lut.bin_index(hi); ++i) {
        const bool zero = lut.entries()[i].a <= 0.0f;
        if (zero && !in_run) ++runs;
        in_run = zero;
    }
    return runs <= 1;
}

double clamp01(double v)
{
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

struct Renderer::Scene {
    std::optional<RgbaVolume> preclassified;
    std::optional<PreintegratedTable> table;
    std::optional<BlockGrid> grid;
    std::vector<Brick> bricks;
    VoxelView<std::int16_t> scalar_view;
    VoxelView<Rgba8> color_view;
};

Renderer::Renderer(const ScalarVolume& volume, const TransferFunction& tf, RenderSettings settings)
    : volume_(volume)
    , settings_(std::move(settings))
    , lut_(build_lut(tf))
    , step_(0.0)
    , ref_step_(reference_step(volume))
    , scene_(std::make_unique<Scene>())
{
    settings_.validate();
    step_ = settings_.step.value_or(ref_step_);
    if (settings_.mode == RenderMode::isosurface) {
        const ValueRange range = volume.value_range();
        if (*settings_.isovalue < range.min || *settings_.isovalue > range.max) {
            throw Error(ErrorCode::IsovalueOutOfRange,
                        "isovalue outside volume range [" + std::to_string(range.min) + ", " + std::to_string(range.max) + "]",
                        "isovalue");
        }
    }

    const Dims dims = volume.dims();
    scene_->scalar_view = whole_view(volume);
    const bool dvr = settings_.mode == RenderMode::dvr;
    if (dvr && settings_.classification == ClassificationMode::pre) {
        scene_->preclassified = preclassify_volume(volume, lut_);
        scene_->color_view.data = scene_->preclassified->voxels.data();
        scene_->color_view.extent = {dims.nx, dims.ny, dims.nz};
        scene_->color_view.volume_dims = {dims.nx, dims.ny, dims.nz};
    }
    if (dvr && settings_.classification == ClassificationMode::preintegrated) {
        scene_->table = build_preintegrated(lut_, ref_step_);
    }
    if (!settings_.use_blocks) {
        return;
    }

    BlockGrid grid = decompose(volume, settings_.block_size, settings_.overlap);
    grid = classify_blocks(volume, std::move(grid), lut_);
    const bool cubic = settings_.interpolation == Interpolation::tricubic;
    // A pre-integrated segment between two skipped samples is only invisible
    // when the zero-opacity values form one interval.
    const bool pre_integrated_gaps = settings_.classification == ClassificationMode::preintegrated
        && !zero_opacity_is_interval(lut_, volume.value_range(), cubic);
    scene_->bricks.resize(grid.total());
    for (std::size_t n = 0; n < grid.total(); ++n) {
        const Block& block = grid.blocks()[n];
        Brick& brick = scene_->bricks[n];
        const std::size_t count = static_cast<std::size_t>(block.extent[0]) * block.extent[1] * block.extent[2];
        brick.scalars.reserve(count);
        for (int k = 0; k < block.extent[2]; ++k) {
            for (int j = 0; j < block.extent[1]; ++j) {
                const std::size_t row = volume.index(block.origin[0], block.origin[1] + j, block.origin[2] + k);
                brick.scalars.insert(brick.scalars.end(), volume.values().begin() + row,
                                     volume.values().begin() + row + block.extent[0]);
                if (scene_->preclassified) {
                    const auto& src = scene_->preclassified->voxels;
                    brick.colors.insert(brick.colors.end(), src.begin() + row, src.begin() + row + block.extent[0]);
                }
            }
        }
        brick.scalar_view = {brick.scalars.data(), block.origin, block.extent, {dims.nx, dims.ny, dims.nz}};
        brick.color_view = {brick.colors.data(), block.origin, block.extent, {dims.nx, dims.ny, dims.nz}};

        if (dvr) {
            const auto window = support_window(brick.scalars, block, cubic, lut_, pre_integrated_gaps);
            brick.skip = !window;
            if (window) brick.window = *window;
        } else {
            double lo = block.value_min;
            double hi = block.value_max;
            if (cubic) {
                const double margin = kCubicOvershoot * (hi - lo);
                lo -= margin;
                hi += margin;
            }
            const double iso = *settings_.isovalue;
            brick.skip = iso < lo || iso > hi;
            brick.above_isovalue = lo > iso;
        }
    }
    scene_->grid = std::move(grid);
}

Renderer::~Renderer() = default;
Renderer::Renderer(Renderer&&) noexcept = default;

const BlockGrid* Renderer::grid() const noexcept
{
    return scene_->grid ? &*scene_->grid : nullptr;
}

namespace {

struct TraceContext {
    const RenderSettings& settings;
    const ClassifiedLUT& lut;
    const PreintegratedTable* table;
    const BlockGrid* grid;
    const std::vector<Brick>* bricks;
    const VoxelView<std::int16_t>& scalar_view;
    const VoxelView<Rgba8>& color_view;
    Vec3 spacing;
    Vec3 extent;  // physical bounds [0, extent]
    double step;
    double ref_step;
};

struct RayResult {
    Rgba accum;  // premultiplied
    std::optional<double> hit;
};

class RayTracer {
public:
    RayTracer(const TraceContext& ctx, const Ray& ray, RenderStats& stats, std::vector<std::uint8_t>& visited)
        : ctx_(ctx)
        , ray_(ray)
        , stats_(stats)
        , visited_(visited)
        , to_eye_(-ray.direction)
    {
    }

    RayResult trace()
    {
        ++stats_.rays;
        double t0 = 0.0;
        double t1 = 0.0;
        if (!intersect_box(t0, t1)) {
            return {};
        }
        t0_ = t0;
        last_ = static_cast<long>(std::floor((t1 - t0) / ctx_.step));
        if (!ctx_.grid) {
            for (long k = 0; k <= last_; ++k) {
                if (visit(k, -1)) break;
            }
        } else {
            trace_blocks(t1);
        }
        return {accum_, hit_};
    }

private:
    bool intersect_box(double& t0, double& t1) const
    {
        t0 = 0.0;
        t1 = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            const double o = ray_.origin[a];
            const double d = ray_.direction[a];
            if (std::abs(d) < 1e-300) {
                if (o < 0.0 || o > ctx_.extent[a]) return false;
                continue;
            }
            double ta = (0.0 - o) / d;
            double tb = (ctx_.extent[a] - o) / d;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        return t0 <= t1;
    }

    double t_at(long k) const { return t0_ + static_cast<double>(k) * ctx_.step; }

    Vec3 voxel_position(double t) const { return divide(ray_.origin + ray_.direction * t, ctx_.spacing); }

    int owner(Vec3 p) const
    {
        const BlockIndex b{ctx_.grid->owner(0, p.x), ctx_.grid->owner(1, p.y), ctx_.grid->owner(2, p.z)};
        return static_cast<int>(ctx_.grid->linear_index(b));
    }

    const VoxelView<std::int16_t>& scalars(int brick) const
    {
        return brick < 0 ? ctx_.scalar_view : (*ctx_.bricks)[brick].scalar_view;
    }
    const VoxelView<Rgba8>& colors(int brick) const
    {
        return brick < 0 ? ctx_.color_view : (*ctx_.bricks)[brick].color_view;
    }

    double scalar_at(double t) const
    {
        const Vec3 p = voxel_position(t);
        return sample_scalar(scalars(ctx_.grid ? owner(p) : -1), p, ctx_.settings.interpolation);
    }

    void trace_blocks(double t1)
    {
        double cuts[64];
        int n = 0;
        cuts[n++] = t0_;
        const auto counts = ctx_.grid->counts();
        for (int a = 0; a < 3; ++a) {
            const double d = ray_.direction[a];
            if (std::abs(d) < 1e-300) continue;
            for (int i = 1; i < counts[a] && n < 63; ++i) {
                const double plane = ctx_.grid->core_begin(a, i) * ctx_.spacing[a];
                const double t = (plane - ray_.origin[a]) / d;
                if (t > t0_ && t < t1) cuts[n++] = t;
            }
        }
        std::sort(cuts + 1, cuts + n);
        cuts[n++] = t1;

        long next = 0;
        for (int s = 0; s + 1 < n && next <= last_; ++s) {
            const bool final_segment = s + 2 == n;
            long end = last_ + 1;
            if (!final_segment) {
                end = std::clamp(static_cast<long>(std::ceil((cuts[s + 1] - t0_) / ctx_.step)), next, last_ + 1);
            }
            if (end == next) continue;
            const int brick = owner(voxel_position(0.5 * (cuts[s] + cuts[s + 1])));
            if ((*ctx_.bricks)[brick].skip) {
                if (skip_range(brick, next, end)) return;
                next = end;
                continue;
            }
            for (long k = next; k < end; ++k) {
                if (visit(k, brick)) return;
            }
            next = end;
        }
    }

    /// Returns true when the ray is finished.
    bool skip_range(int brick, long begin, long end)
    {
        if (ctx_.settings.mode == RenderMode::isosurface) {
            stats_.samples_skipped += static_cast<std::uint64_t>(end - begin);
            prev_known_ = true;
            prev_above_ = (*ctx_.bricks)[brick].above_isovalue;
            prev_t_ = t_at(end - 1);
            return false;
        }
        if (prev_valid_) {
            // The segment leading into the first skipped sample may still be visible.
            const double t = t_at(begin);
            const Vec3 p = voxel_position(t);
            const int owner_brick = owner(p);
            visited_[owner_brick] = 1;
            if (evaluate(begin, t, p, owner_brick)) return true;
            ++begin;
        }
        stats_.samples_skipped += static_cast<std::uint64_t>(end - begin);
        prev_valid_ = false;
        return false;
    }

    /// Returns true when the ray is finished.
    bool visit(long k, int segment_brick)
    {
        const double t = t_at(k);
        const Vec3 p = voxel_position(t);
        int brick = -1;
        if (ctx_.grid) {
            brick = owner(p);
            const Brick& b = (*ctx_.bricks)[brick];
            if (brick != segment_brick && b.skip) {
                return skip_range(brick, k, k + 1);
            }
            if (ctx_.settings.mode == RenderMode::dvr && !inside(b.window, p)) {
                return skip_range(brick, k, k + 1);
            }
            visited_[brick] = 1;
        }
        return evaluate(k, t, p, brick);
    }

    /// Returns true when the ray is finished.
    bool evaluate(long k, double t, Vec3 p, int brick)
    {
        ++stats_.samples_taken;
        if (ctx_.settings.mode == RenderMode::isosurface) {
            return visit_isosurface(k, t, p, brick);
        }
        switch (ctx_.settings.classification) {
        case ClassificationMode::post: {
            const double s = sample_scalar(scalars(brick), p, ctx_.settings.interpolation);
            const Rgba& c = classify_post(ctx_.lut, s);
            if (c.a > 0.0f) {
                accumulate({c.r, c.g, c.b}, c.a, p, brick, ctx_.ref_step);
            }
            break;
        }
        case ClassificationMode::pre: {
            const Rgba v = interpolate(colors(brick), p, ctx_.settings.interpolation, premultiplied);
            const double a = clamp01(v.a);
            if (a > 0.0) {
                const Vec3 c{clamp01(v.r / a), clamp01(v.g / a), clamp01(v.b / a)};
                accumulate(c, static_cast<float>(a), p, brick, ctx_.ref_step);
            }
            break;
        }
        case ClassificationMode::preintegrated: {
            const double s = sample_scalar(scalars(brick), p, ctx_.settings.interpolation);
            if (k > 0 && !prev_valid_) {
                prev_scalar_ = scalar_at(t_at(k - 1));
                ++stats_.samples_taken;
                prev_valid_ = true;
            }
            if (prev_valid_) {
                const Rgba& seg = ctx_.table->lookup(prev_scalar_, s);
                if (seg.a > 0.0f) {
                    const Vec3 c{clamp01(seg.r / seg.a), clamp01(seg.g / seg.a), clamp01(seg.b / seg.a)};
                    accumulate(c, seg.a, p, brick, ctx_.table->reference_length());
                }
            }
            prev_scalar_ = s;
            prev_valid_ = true;
            break;
        }
        }
        return accum_.a >= ctx_.settings.early_termination_alpha;
    }

    /// Central differences at p +- 0.5 can reach one voxel past a brick; such
    /// gradients read the whole volume.
    const VoxelView<std::int16_t>& gradient_source(int brick, Vec3 p) const
    {
        if (brick < 0) return ctx_.scalar_view;
        const auto& view = (*ctx_.bricks)[brick].scalar_view;
        const bool cubic = ctx_.settings.interpolation == Interpolation::tricubic;
        for (int a = 0; a < 3; ++a) {
            const int last = view.volume_dims[a] - 1;
            const int lo = std::max(0, static_cast<int>(std::floor(p[a] - 0.5)) - (cubic ? 1 : 0));
            const int hi = std::min(last, static_cast<int>(std::floor(p[a] + 0.5)) + (cubic ? 2 : 1));
            if (lo < view.origin[a] || hi > view.origin[a] + view.extent[a] - 1) return ctx_.scalar_view;
        }
        return view;
    }

    Vec3 gradient_at(int brick, Vec3 p) const
    {
        return scalar_gradient(gradient_source(brick, p), p, ctx_.settings.interpolation, ctx_.spacing);
    }

    void accumulate(Vec3 color, float alpha, Vec3 p, int brick, double ref_step)
    {
        if (ctx_.settings.lighting) {
            const Vec3 g = gradient_at(brick, p);
            color = shade_phong(color, g, to_eye_, to_eye_);
        }
        const Rgba sample{static_cast<float>(clamp01(color.x)), static_cast<float>(clamp01(color.y)),
                          static_cast<float>(clamp01(color.z)), alpha};
        accum_ = composite_step(accum_, sample, ctx_.step, ref_step);
    }

    bool visit_isosurface(long, double t, Vec3 p, int brick)
    {
        const double iso = *ctx_.settings.isovalue;
        const bool above = sample_scalar(scalars(brick), p, ctx_.settings.interpolation) >= iso;
        if (prev_known_ && above != prev_above_) {
            double lo = prev_t_;
            double hi = t;
            for (int i = 0; i < 8; ++i) {
                const double mid = 0.5 * (lo + hi);
                if ((scalar_at(mid) >= iso) == prev_above_) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            const double hit = 0.5 * (lo + hi);
            const Rgba& c = ctx_.lut.lookup(iso);
            Vec3 color{c.r, c.g, c.b};
            if (ctx_.settings.lighting) {
                const Vec3 hp = voxel_position(hit);
                const int hb = ctx_.grid ? owner(hp) : -1;
                color = shade_phong(color, gradient_at(hb, hp), to_eye_, to_eye_);
            }
            accum_ = {static_cast<float>(clamp01(color.x)), static_cast<float>(clamp01(color.y)),
                      static_cast<float>(clamp01(color.z)), 1.0f};
            hit_ = hit;
            return true;
        }
        prev_known_ = true;
        prev_above_ = above;
        prev_t_ = t;
        return false;
    }

    static bool inside(const VoxelBox& box, Vec3 p)
    {
        return p.x >= box.lo[0] && p.x <= box.hi[0] && p.y >= box.lo[1] && p.y <= box.hi[1] && p.z >= box.lo[2]
            && p.z <= box.hi[2];
    }

    const TraceContext& ctx_;
    const Ray& ray_;
    RenderStats& stats_;
    std::vector<std::uint8_t>& visited_;
    Vec3 to_eye_;
    double t0_ = 0.0;
    long last_ = -1;
    Rgba accum_{};
    std::optional<double> hit_;
    // DVR pre-integration: scalar at the previous sample position.
    bool prev_valid_ = false;
    double prev_scalar_ = 0.0;
    // Isosurface: side of the isovalue at the previous sample.
    bool prev_known_ = false;
    bool prev_above_ = false;
    double prev_t_ = 0.0;
};

Rgba8 resolve_pixel(Rgba accum, Rgba background)
{
    const double bg_a = background.a;
    const double out_a = accum.a + (1.0 - accum.a) * bg_a;
    if (!(out_a > 0.0)) {
        return {0, 0, 0, 0};
    }
    const auto channel = [&](float c, float bg) { return (c + (1.0 - accum.a) * bg * bg_a) / out_a; };
    return {to_unorm8(channel(accum.r, background.r)), to_unorm8(channel(accum.g, background.g)),
            to_unorm8(channel(accum.b, background.b)), to_unorm8(out_a)};
}

}  // namespace

ImageRGBA Renderer::render(const Camera& camera, const RenderOptions& options) const
{
    camera.validate();
    const auto started = std::chrono::steady_clock::now();
    const PixelRect region = options.region.value_or(PixelRect{0, 0, camera.width, camera.height});
    if (region.x < 0 || region.y < 0 || region.width <= 0 || region.height <= 0 || region.x + region.width > camera.width
        || region.y + region.height > camera.height) {
        throw Error(ErrorCode::InvalidSettings, "region lies outside the image", "region");
    }

    const TraceContext ctx{settings_,
                           lut_,
                           scene_->table ? &*scene_->table : nullptr,
                           scene_->grid ? &*scene_->grid : nullptr,
                           &scene_->bricks,
                           scene_->scalar_view,
                           scene_->color_view,
                           volume_.spacing(),
                           volume_.physical_extent(),
                           step_,
                           ref_step_};

    ImageRGBA image(region.width, region.height);
    constexpr int kTile = 16;
    const int tiles_x = (region.width + kTile - 1) / kTile;
    const int tiles_y = (region.height + kTile - 1) / kTile;
    const int tiles = tiles_x * tiles_y;
    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(tiles));

    std::atomic<int> next_tile{0};
    std::vector<RenderStats> stats(workers);
    std::vector<std::vector<std::uint8_t>> visited(workers, std::vector<std::uint8_t>(scene_->bricks.size(), 0));
    const auto work = [&](unsigned w) {
        for (int tile = next_tile++; tile < tiles; tile = next_tile++) {
            const int tx = (tile % tiles_x) * kTile;
            const int ty = (tile / tiles_x) * kTile;
            for (int y = ty; y < std::min(ty + kTile, region.height); ++y) {
                for (int x = tx; x < std::min(tx + kTile, region.width); ++x) {
                    const Ray ray = generate_ray(camera, region.x + x, region.y + y);
                    RayTracer tracer(ctx, ray, stats[w], visited[w]);
                    image.at(x, y) = resolve_pixel(tracer.trace().accum, settings_.background);
                }
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (std::thread& t : pool) t.join();
    }

    RenderStats total;
    for (const RenderStats& s : stats) {
        total.rays += s.rays;
        total.samples_taken += s.samples_taken;
        total.samples_skipped += s.samples_skipped;
    }
    for (std::size_t b = 0; b < scene_->bricks.size(); ++b) {
        for (const auto& v : visited) {
            if (v[b]) {
                ++total.blocks_visited;
                break;
            }
        }
    }
    total.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    image.stats = total;
    return image;
}

std::optional<double> Renderer::isosurface_hit(const Ray& ray) const
{
    if (settings_.mode != RenderMode::isosurface) {
        throw Error(ErrorCode::InvalidSettings, "renderer is not in isosurface mode", "mode");
    }
    const TraceContext ctx{settings_,
                           lut_,
                           nullptr,
                           scene_->grid ? &*scene_->grid : nullptr,
                           &scene_->bricks,
                           scene_->scalar_view,
                           scene_->color_view,
                           volume_.spacing(),
                           volume_.physical_extent(),
                           step_,
                           ref_step_};
    RenderStats stats;
    std::vector<std::uint8_t> visited(scene_->bricks.size(), 0);
    return RayTracer(ctx, ray, stats, visited).trace().hit;
}

ImageRGBA render(const ScalarVolume& volume, const Camera& camera, const TransferFunction& tf, const RenderSettings& settings,
                 const RenderOptions& options)
{
    return Renderer(volume, tf, settings).render(camera, options);
}

}  // namespace voxelcast
