#pragma once

#include "voxelcast/image.hpp"
#include "voxelcast/raycaster.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace voxelcast {

inline constexpr double kPsnrCap = 99.0;

struct QualityReport {
    double psnr_db = kPsnrCap;
    double ssim = 1.0;
    std::array<double, 3> mse{0.0, 0.0, 0.0};  // R, G, B
    int width = 0;
    int height = 0;
};

nlohmann::json to_json(const QualityReport& report);

/// RGB only, 8-bit scale; identical images give kPsnrCap.
double psnr(const ImageRGBA& a, const ImageRGBA& b);

/// Mean local SSIM on luma, 11x11 Gaussian window (sigma 1.5). Images
/// smaller than the window are compared with one global window.
double ssim(const ImageRGBA& a, const ImageRGBA& b);

QualityReport compare(const ImageRGBA& reference, const ImageRGBA& test);

struct ConvergenceRow {
    double step = 0.0;
    double psnr_db = 0.0;
    double wall_time_ms = 0.0;
};

struct ConvergenceStudy {
    double reference_step = 0.0;
    std::vector<ConvergenceRow> rows;
};

/// One render per step (descending) against a reference render, by default at
/// half the smallest step.
ConvergenceStudy convergence_study(const ScalarVolume& volume, const Camera& camera, const TransferFunction& tf,
                                   const RenderSettings& settings, const std::vector<double>& steps,
                                   const RenderOptions& options = {}, std::optional<double> reference_step = std::nullopt);

std::string to_csv(const ConvergenceStudy& study);
nlohmann::json to_json(const ConvergenceStudy& study);

}  // namespace voxelcast
