#pragma once

#include "voxelcast/blockgrid.hpp"
#include "voxelcast/camera.hpp"
#include "voxelcast/classification.hpp"
#include "voxelcast/image.hpp"
#include "voxelcast/sampling.hpp"
#include "voxelcast/volume.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace voxelcast {

enum class RenderMode { dvr, isosurface };
enum class ClassificationMode { post, pre, preintegrated };

std::string to_string(RenderMode mode);
std::string to_string(ClassificationMode mode);

struct RenderSettings {
    RenderMode mode = RenderMode::dvr;
    /// Sampling distance along the ray in mm; defaults to reference_step().
    std::optional<double> step;
    ClassificationMode classification = ClassificationMode::post;
    Interpolation interpolation = Interpolation::tricubic;
    bool lighting = true;
    double early_termination_alpha = 0.99;
    std::optional<double> isovalue;
    Rgba background{0.0f, 0.0f, 0.0f, 1.0f};
    bool use_blocks = true;
    int block_size = BlockGrid::kDefaultBlockSize;
    int overlap = BlockGrid::kDefaultOverlap;

    /// Throws InvalidSettings naming the offending field.
    void validate() const;
};

RenderSettings render_settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RenderSettings& settings);

/// Half of the smallest voxel spacing: the length LUT opacities refer to.
double reference_step(const ScalarVolume& volume);

struct PixelRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

struct RenderOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
    /// Render only this sub-rectangle of the camera image.
    std::optional<PixelRect> region;
};

/// Front-to-back "over" with opacity correction for the step length.
/// `accum` is premultiplied, `sample` is straight colour + opacity.
Rgba composite_step(Rgba accum, Rgba sample, double step, double ref_step);

struct PhongParams {
    double ambient = 0.1;
    double diffuse = 0.7;
    double specular = 0.2;
    double shininess = 32.0;
};

/// `view_dir` and `light_dir` point from the surface towards the eye and the
/// light. The normal is -normalize(gradient); a zero gradient leaves the colour unshaded.
Vec3 shade_phong(Vec3 base, Vec3 gradient, Vec3 view_dir, Vec3 light_dir, const PhongParams& params = {});

/// Everything a render needs that does not depend on the camera: LUT,
/// optional pre-classified volume or pre-integration table, and the block
/// grid with its bricks. The volume must outlive the renderer.
class Renderer {
public:
    Renderer(const ScalarVolume& volume, const TransferFunction& tf, RenderSettings settings);
    ~Renderer();
    Renderer(Renderer&&) noexcept;
    Renderer& operator=(Renderer&&) = delete;

    ImageRGBA render(const Camera& camera, const RenderOptions& options = {}) const;

    /// Isosurface mode: ray parameter of the first crossing, if any.
    std::optional<double> isosurface_hit(const Ray& ray) const;

    const RenderSettings& settings() const noexcept { return settings_; }
    double step() const noexcept { return step_; }
    const ClassifiedLUT& lut() const noexcept { return lut_; }
    /// Null when settings.use_blocks is false.
    const BlockGrid* grid() const noexcept;

private:
    struct Scene;

    const ScalarVolume& volume_;
    RenderSettings settings_;
    ClassifiedLUT lut_;
    double step_;
    double ref_step_;
    std::unique_ptr<Scene> scene_;
};

ImageRGBA render(const ScalarVolume& volume, const Camera& camera, const TransferFunction& tf,
                 const RenderSettings& settings, const RenderOptions& options = {});

}  // namespace voxelcast
