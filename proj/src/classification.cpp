#include "voxelcast/classification.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace voxelcast {

std::uint8_t to_unorm8(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------------------
// TransferFunction

TransferFunction::TransferFunction(std::vector<ControlPoint> points, double domain_lo, double domain_hi)
    : points_(std::move(points))
    , lo_(domain_lo)
    , hi_(domain_hi)
{
    if (points_.empty()) {
        throw Error(ErrorCode::InvalidTransferFunction, "at least one control point is required", "points");
    }
    if (!(lo_ < hi_)) {
        throw Error(ErrorCode::InvalidTransferFunction, "domain lo must be below hi", "domain");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const ControlPoint& p = points_[i];
        if (i > 0 && !(p.value > points_[i - 1].value)) {
            throw Error(ErrorCode::InvalidTransferFunction, "control point values must be strictly increasing", "points");
        }
        for (const float c : {p.color.r, p.color.g, p.color.b, p.color.a}) {
            if (!(c >= 0.0f && c <= 1.0f)) {
                throw Error(ErrorCode::InvalidTransferFunction, "control point channels must lie in [0,1]", "points");
            }
        }
    }
}

Rgba TransferFunction::evaluate(double scalar) const
{
    if (scalar <= points_.front().value) return points_.front().color;
    if (scalar >= points_.back().value) return points_.back().color;
    const auto upper = std::upper_bound(points_.begin(), points_.end(), scalar,
                                        [](double s, const ControlPoint& p) { return s < p.value; });
    const ControlPoint& b = *upper;
    const ControlPoint& a = *(upper - 1);
    const double t = (scalar - a.value) / (b.value - a.value);
    const auto mix = [t](float x, float y) { return static_cast<float>(x + (y - x) * t); };
    return {mix(a.color.r, b.color.r), mix(a.color.g, b.color.g), mix(a.color.b, b.color.b), mix(a.color.a, b.color.a)};
}

std::vector<std::string> TransferFunction::preset_names()
{
    return {"bone", "soft-tissue", "grayscale"};
}

TransferFunction TransferFunction::preset(const std::string& name)
{
    if (name == "bone") {
        return TransferFunction({
            {-1024.0, {0.00f, 0.00f, 0.00f, 0.00f}},
            {150.0, {0.85f, 0.75f, 0.60f, 0.00f}},
            {400.0, {0.92f, 0.85f, 0.75f, 0.35f}},
            {1200.0, {1.00f, 0.98f, 0.95f, 0.80f}},
            {3071.0, {1.00f, 1.00f, 1.00f, 0.90f}},
        });
    }
    if (name == "soft-tissue") {
        return TransferFunction({
            {-1024.0, {0.00f, 0.00f, 0.00f, 0.00f}},
            {-500.0, {0.60f, 0.30f, 0.20f, 0.00f}},
            {-150.0, {0.85f, 0.65f, 0.45f, 0.01f}},
            {20.0, {0.85f, 0.45f, 0.40f, 0.03f}},
            {100.0, {0.90f, 0.35f, 0.30f, 0.08f}},
            {300.0, {1.00f, 0.95f, 0.90f, 0.40f}},
            {3071.0, {1.00f, 1.00f, 1.00f, 0.80f}},
        });
    }
    if (name == "grayscale") {
        return TransferFunction({
            {-1024.0, {0.0f, 0.0f, 0.0f, 0.0f}},
            {3071.0, {1.0f, 1.0f, 1.0f, 1.0f}},
        });
    }
    throw Error(ErrorCode::InvalidTransferFunction, "unknown preset '" + name + "'", "transfer_function");
}

namespace {

ControlPoint point_from_json(const nlohmann::json& p)
{
    if (!p.is_array() || p.size() != 5) {
        throw Error(ErrorCode::InvalidTransferFunction, "control points are [value, r, g, b, a]", "points");
    }
    return {p[0].get<double>(),
            {p[1].get<float>(), p[2].get<float>(), p[3].get<float>(), p[4].get<float>()}};
}

}  // namespace

TransferFunction transfer_function_from_json(const nlohmann::json& j)
{
    try {
        if (j.is_string()) {
            return TransferFunction::preset(j.get<std::string>());
        }
        std::vector<ControlPoint> points;
        double lo = TransferFunction::kDefaultLo;
        double hi = TransferFunction::kDefaultHi;
        const nlohmann::json* list = &j;
        if (j.is_object()) {
            if (j.contains("preset")) {
                return TransferFunction::preset(j.at("preset").get<std::string>());
            }
            if (j.contains("domain")) {
                lo = j.at("domain").at(0).get<double>();
                hi = j.at("domain").at(1).get<double>();
            }
            list = &j.at("points");
        }
        if (!list->is_array()) {
            throw Error(ErrorCode::InvalidTransferFunction, "expected a list of control points", "points");
        }
        for (const auto& p : *list) points.push_back(point_from_json(p));
        return TransferFunction(std::move(points), lo, hi);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidTransferFunction, e.what(), "transfer_function");
    }
}

nlohmann::json to_json(const TransferFunction& tf)
{
    nlohmann::json points = nlohmann::json::array();
    for (const ControlPoint& p : tf.points()) {
        points.push_back({p.value, p.color.r, p.color.g, p.color.b, p.color.a});
    }
    return {{"domain", {tf.domain_lo(), tf.domain_hi()}}, {"points", points}};
}

// ---------------------------------------------------------------------------
// LUT

ClassifiedLUT::ClassifiedLUT(std::vector<Rgba> entries, double lo, double hi)
    : entries_(std::move(entries))
    , lo_(lo)
    , hi_(hi)
    , scale_((static_cast<double>(entries_.size()) - 1.0) / (hi - lo))
{
}

double ClassifiedLUT::bin_center(int i) const noexcept
{
    return lo_ + i / scale_;
}

int ClassifiedLUT::bin_index(double scalar) const noexcept
{
    const double t = (std::clamp(scalar, lo_, hi_) - lo_) * scale_;
    return static_cast<int>(std::lround(t));
}

float ClassifiedLUT::max_opacity(double lo, double hi) const noexcept
{
    float best = 0.0f;
    for (int i = bin_index(lo), last = bin_index(hi); i <= last; ++i) {
        best = std::max(best, entries_[i].a);
    }
    return best;
}

ClassifiedLUT build_lut(const TransferFunction& tf, int bins)
{
    if (bins < 2) {
        throw Error(ErrorCode::InvalidTransferFunction, "a LUT needs at least two bins", "bins");
    }
    std::vector<Rgba> entries(bins);
    const double lo = tf.domain_lo();
    const double step = (tf.domain_hi() - lo) / (bins - 1);
    for (int i = 0; i < bins; ++i) {
        entries[i] = tf.evaluate(lo + i * step);
    }
    return ClassifiedLUT(std::move(entries), lo, tf.domain_hi());
}

RgbaVolume preclassify_volume(const ScalarVolume& volume, const ClassifiedLUT& lut)
{
    RgbaVolume out;
    out.dims = volume.dims();
    const auto values = volume.values();
    out.voxels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Rgba& c = lut.lookup(values[i]);
        out.voxels[i] = {to_unorm8(c.r), to_unorm8(c.g), to_unorm8(c.b), to_unorm8(c.a)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pre-integration

PreintegratedTable::PreintegratedTable(std::vector<Rgba> entries, int resolution, double lo, double hi, double reference_length)
    : entries_(std::move(entries))
    , resolution_(resolution)
    , lo_(lo)
    , hi_(hi)
    , reference_length_(reference_length)
{
}

double PreintegratedTable::bin_center(int i) const noexcept
{
    return lo_ + (hi_ - lo_) * i / (resolution_ - 1);
}

int PreintegratedTable::bin_index(double scalar) const noexcept
{
    const double t = (std::clamp(scalar, lo_, hi_) - lo_) / (hi_ - lo_) * (resolution_ - 1);
    return static_cast<int>(std::lround(t));
}

Rgba integrate_segment(const ClassifiedLUT& lut, double front, double back, int substeps)
{
    const double exponent = 1.0 / substeps;
    double r = 0.0, g = 0.0, b = 0.0, a = 0.0;
    for (int j = 0; j < substeps; ++j) {
        const double s = front + (back - front) * (j + 0.5) / substeps;
        const Rgba& c = lut.lookup(s);
        if (c.a <= 0.0f) continue;
        const double alpha = 1.0 - std::pow(1.0 - static_cast<double>(c.a), exponent);
        const double w = (1.0 - a) * alpha;
        r += w * c.r;
        g += w * c.g;
        b += w * c.b;
        a += w;
    }
    return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b), static_cast<float>(a)};
}

PreintegratedTable build_preintegrated(const ClassifiedLUT& lut, double reference_length, int resolution, int substeps)
{
    if (!(reference_length > 0.0)) {
        throw Error(ErrorCode::InvalidSettings, "reference length must be positive", "reference_length");
    }
    if (resolution < 2 || substeps < 1) {
        throw Error(ErrorCode::InvalidSettings, "table resolution must be >= 2 and substeps >= 1", "resolution");
    }
    const double lo = lut.domain_lo();
    const double hi = lut.domain_hi();
    std::vector<Rgba> entries(static_cast<std::size_t>(resolution) * resolution);
    for (int f = 0; f < resolution; ++f) {
        const double front = lo + (hi - lo) * f / (resolution - 1);
        for (int b = 0; b < resolution; ++b) {
            const double back = lo + (hi - lo) * b / (resolution - 1);
            entries[static_cast<std::size_t>(f) * resolution + b] = integrate_segment(lut, front, back, substeps);
        }
    }
    return PreintegratedTable(std::move(entries), resolution, lo, hi, reference_length);
}

}  // namespace voxelcast
