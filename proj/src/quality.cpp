#include "voxelcast/quality.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace voxelcast {

namespace {

void require_same_dims(const ImageRGBA& a, const ImageRGBA& b)
{
    if (a.width != b.width || a.height != b.height) {
        throw Error(ErrorCode::DimensionMismatch, "images are " + std::to_string(a.width) + "x" + std::to_string(a.height)
                                                      + " and " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
}

std::array<double, 3> channel_mse(const ImageRGBA& a, const ImageRGBA& b)
{
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const Rgba8 p = a.pixels[i];
        const Rgba8 q = b.pixels[i];
        const double dr = double(p.r) - q.r;
        const double dg = double(p.g) - q.g;
        const double db = double(p.b) - q.b;
        sum[0] += dr * dr;
        sum[1] += dg * dg;
        sum[2] += db * db;
    }
    const double n = a.pixels.empty() ? 1.0 : double(a.pixels.size());
    return {sum[0] / n, sum[1] / n, sum[2] / n};
}

double psnr_from_mse(const std::array<double, 3>& mse)
{
    const double m = (mse[0] + mse[1] + mse[2]) / 3.0;
    if (m <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / m));
}

std::vector<double> luma(const ImageRGBA& image)
{
    std::vector<double> out(image.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Rgba8 p = image.pixels[i];
        out[i] = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
    }
    return out;
}

constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

double ssim_term(double mx, double my, double vx, double vy, double cxy)
{
    return ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
}

}  // namespace

nlohmann::json to_json(const QualityReport& r)
{
    return {{"psnr_db", r.psnr_db}, {"ssim", r.ssim}, {"mse", {r.mse[0], r.mse[1], r.mse[2]}}, {"width", r.width}, {"height", r.height}};
}

double psnr(const ImageRGBA& a, const ImageRGBA& b)
{
    require_same_dims(a, b);
    return psnr_from_mse(channel_mse(a, b));
}

double ssim(const ImageRGBA& a, const ImageRGBA& b)
{
    require_same_dims(a, b);
    const std::vector<double> x = luma(a);
    const std::vector<double> y = luma(b);
    const int w = a.width;
    const int h = a.height;
    if (x.empty()) {
        return 1.0;
    }

    constexpr int kWindow = 11;
    if (w < kWindow || h < kWindow) {
        const double n = double(x.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double vx = 0.0, vy = 0.0, cxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            vx += (x[i] - mx) * (x[i] - mx);
            vy += (y[i] - my) * (y[i] - my);
            cxy += (x[i] - mx) * (y[i] - my);
        }
        return ssim_term(mx, my, vx / n, vy / n, cxy / n);
    }

    std::array<double, kWindow> g{};
    double gsum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        gsum += g[i];
    }
    for (double& v : g) v /= gsum;

    // Separable Gaussian over the 'valid' region.
    const int ow = w - kWindow + 1;
    const int oh = h - kWindow + 1;
    const auto blur = [&](const std::vector<double>& src) {
        std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < ow; ++xx) {
                double s = 0.0;
                for (int t = 0; t < kWindow; ++t) s += g[t] * src[static_cast<std::size_t>(yy) * w + xx + t];
                horiz[static_cast<std::size_t>(yy) * ow + xx] = s;
            }
        }
        std::vector<double> out(static_cast<std::size_t>(ow) * oh);
        for (int yy = 0; yy < oh; ++yy) {
            for (int xx = 0; xx < ow; ++xx) {
                double s = 0.0;
                for (int t = 0; t < kWindow; ++t) s += g[t] * horiz[static_cast<std::size_t>(yy + t) * ow + xx];
                out[static_cast<std::size_t>(yy) * ow + xx] = s;
            }
        }
        return out;
    };
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = blur(x);
    const auto my = blur(y);
    const auto sxx = blur(xx);
    const auto syy = blur(yy);
    const auto sxy = blur(xy);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cxy = sxy[i] - mx[i] * my[i];
        total += ssim_term(mx[i], my[i], vx, vy, cxy);
    }
    return total / double(mx.size());
}

QualityReport compare(const ImageRGBA& reference, const ImageRGBA& test)
{
    require_same_dims(reference, test);
    QualityReport r;
    r.mse = channel_mse(reference, test);
    r.psnr_db = psnr_from_mse(r.mse);
    r.ssim = ssim(reference, test);
    r.width = reference.width;
    r.height = reference.height;
    return r;
}

ConvergenceStudy convergence_study(const ScalarVolume& volume, const Camera& camera, const TransferFunction& tf,
                                   const RenderSettings& settings, const std::vector<double>& steps,
                                   const RenderOptions& options, std::optional<double> reference_step)
{
    if (steps.empty()) {
        throw Error(ErrorCode::InvalidSettings, "no steps given", "steps");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i] > 0.0) || (i > 0 && steps[i] >= steps[i - 1])) {
            throw Error(ErrorCode::InvalidSettings, "steps must be positive and strictly descending", "steps");
        }
    }
    ConvergenceStudy study;
    if (reference_step && !(*reference_step > 0.0 && *reference_step <= steps.back())) {
        throw Error(ErrorCode::InvalidSettings, "reference step must be positive and no larger than the smallest step",
                    "reference_step");
    }
    study.reference_step = reference_step.value_or(steps.back() / 2.0);
    RenderSettings s = settings;
    s.step = study.reference_step;
    const ImageRGBA reference = render(volume, camera, tf, s, options);
    for (const double step : steps) {
        s.step = step;
        const ImageRGBA image = render(volume, camera, tf, s, options);
        study.rows.push_back({step, psnr(reference, image), image.stats.wall_time_ms});
    }
    return study;
}

std::string to_csv(const ConvergenceStudy& study)
{
    std::ostringstream out;
    out << "step_mm,psnr_db,wall_time_ms\n";
    for (const auto& row : study.rows) {
        out << row.step << ',' << row.psnr_db << ',' << row.wall_time_ms << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const ConvergenceStudy& study)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : study.rows) {
        rows.push_back({{"step_mm", row.step}, {"psnr_db", row.psnr_db}, {"wall_time_ms", row.wall_time_ms}});
    }
    return {{"reference_step_mm", study.reference_step}, {"rows", rows}};
}

}  // namespace voxelcast
