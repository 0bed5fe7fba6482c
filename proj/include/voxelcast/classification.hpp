#pragma once

#include "voxelcast/volume.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace voxelcast {

struct Rgba {
    float r = 0.0f;
    float g = 0.0f;
    float b = 0.0f;
    float a = 0.0f;

    Rgba& operator+=(const Rgba& o)
    {
        r += o.r;
        g += o.g;
        b += o.b;
        a += o.a;
        return *this;
    }
    friend Rgba operator*(Rgba c, double s)
    {
        const auto f = static_cast<float>(s);
        return {c.r * f, c.g * f, c.b * f, c.a * f};
    }
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

struct Rgba8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    std::uint8_t a = 0;
    friend bool operator==(const Rgba8&, const Rgba8&) = default;
};

std::uint8_t to_unorm8(double v);

struct ControlPoint {
    double value = 0.0;
    Rgba color;
};

/// Piecewise-linear T(x): scalar -> colour + opacity. Opacity is defined per
/// reference step length (half the smallest voxel spacing).
class TransferFunction {
public:
    /// CT range covered one bin per code by the default 4096-entry LUT.
    static constexpr double kDefaultLo = -1024.0;
    static constexpr double kDefaultHi = 3071.0;

    TransferFunction(std::vector<ControlPoint> points, double domain_lo = kDefaultLo, double domain_hi = kDefaultHi);

    const std::vector<ControlPoint>& points() const noexcept { return points_; }
    double domain_lo() const noexcept { return lo_; }
    double domain_hi() const noexcept { return hi_; }

    /// Exact piecewise-linear evaluation, clamped to the end points.
    Rgba evaluate(double scalar) const;

    static TransferFunction preset(const std::string& name);
    static std::vector<std::string> preset_names();

private:
    std::vector<ControlPoint> points_;
    double lo_;
    double hi_;
};

/// JSON: either a preset name, a list of [value, r, g, b, a] points, or
/// {"domain": [lo, hi], "points": [[value, r, g, b, a], ...]}.
TransferFunction transfer_function_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransferFunction& tf);

/// T(x) sampled at `bins` evenly spaced centres spanning [lo, hi] inclusive.
class ClassifiedLUT {
public:
    static constexpr int kDefaultBins = 4096;

    ClassifiedLUT(std::vector<Rgba> entries, double lo, double hi);

    int bins() const noexcept { return static_cast<int>(entries_.size()); }
    double domain_lo() const noexcept { return lo_; }
    double domain_hi() const noexcept { return hi_; }
    double bin_center(int i) const noexcept;
    const std::vector<Rgba>& entries() const noexcept { return entries_; }

    /// Nearest bin after clamping to the domain.
    int bin_index(double scalar) const noexcept;
    const Rgba& lookup(double scalar) const noexcept { return entries_[bin_index(scalar)]; }

    /// Largest opacity among bins a value in [lo, hi] can map to.
    float max_opacity(double lo, double hi) const noexcept;

private:
    std::vector<Rgba> entries_;
    double lo_;
    double hi_;
    double scale_;
};

ClassifiedLUT build_lut(const TransferFunction& tf, int bins = ClassifiedLUT::kDefaultBins);

/// Post-classification: classify the already interpolated scalar.
inline const Rgba& classify_post(const ClassifiedLUT& lut, double scalar) noexcept
{
    return lut.lookup(scalar);
}

/// Pre-classified volume: 8 bits per channel, 4 bytes per voxel.
struct RgbaVolume {
    Dims dims;
    std::vector<Rgba8> voxels;

    std::size_t memory_bytes() const noexcept { return voxels.size() * sizeof(Rgba8); }
};

RgbaVolume preclassify_volume(const ScalarVolume& volume, const ClassifiedLUT& lut);

/// Table of segment integrals indexed by (front scalar, back scalar).
/// Entries are premultiplied: rgb holds accumulated colour, a the opacity,
/// for a segment of length reference_length.
class PreintegratedTable {
public:
    static constexpr int kDefaultResolution = 256;
    static constexpr int kDefaultSubsteps = 64;

    PreintegratedTable(std::vector<Rgba> entries, int resolution, double lo, double hi, double reference_length);

    int resolution() const noexcept { return resolution_; }
    double reference_length() const noexcept { return reference_length_; }
    double bin_center(int i) const noexcept;
    int bin_index(double scalar) const noexcept;

    const Rgba& at(int front, int back) const noexcept
    {
        return entries_[static_cast<std::size_t>(front) * resolution_ + back];
    }
    const Rgba& lookup(double front, double back) const noexcept { return at(bin_index(front), bin_index(back)); }

private:
    std::vector<Rgba> entries_;
    int resolution_;
    double lo_;
    double hi_;
    double reference_length_;
};

/// Front-to-back quadrature of the LUT along a linear ramp, `substeps` midpoint samples.
Rgba integrate_segment(const ClassifiedLUT& lut, double front, double back, int substeps);

PreintegratedTable build_preintegrated(const ClassifiedLUT& lut, double reference_length,
                                       int resolution = PreintegratedTable::kDefaultResolution,
                                       int substeps = PreintegratedTable::kDefaultSubsteps);

}  // namespace voxelcast
