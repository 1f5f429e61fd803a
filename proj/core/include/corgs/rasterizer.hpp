#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace corgs {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kLowPassFilter = 0.3;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kTransmittanceCutoff = 1e-4;
inline constexpr double kDepthEpsilon = 1e-6;

/// Screen-space footprint of one primitive. `cov2d` is stored as
/// (xx, xy, yy) and `conic` is its inverse in the same layout.
struct Projected2DGaussian {
    Eigen::Vector2d mean2d;
    Eigen::Vector3d cov2d;
    Eigen::Vector3d conic;
    Vec3 camera_position;
    double depth = 0.0;
    Vec3 color;
    double opacity = 0.0;
    std::uint32_t source_index = 0;
    /// Half-width of the pixel box outside which alpha < 1/255.
    double radius = 0.0;
};

/// EWA projection. Returns nullopt when the primitive is behind the near
/// plane, cannot reach alpha >= 1/255 anywhere, or its footprint misses
/// the image.
std::optional<Projected2DGaussian> project_gaussian(const GaussianField& field, std::size_t index,
                                                    const Camera& camera);

/// Per-row replay data: for every pixel of a row the contributing projected
/// primitives in compositing order.
struct RowContributors {
    std::vector<std::uint32_t> ids;
    std::vector<std::uint32_t> offsets;  // width + 1 entries
};

struct RenderOutput {
    ImageBuffer color;          // 3 channels
    ImageBuffer depth;          // 1 channel, alpha-normalized expected depth
    ImageBuffer accum_alpha;    // 1 channel
    ImageBuffer transmittance;  // 1 channel, T left after compositing

    /// Front-to-back sorted projections (index into `projected` is what
    /// `rows[*].ids` refer to).
    std::vector<Projected2DGaussian> projected;
    std::vector<RowContributors> rows;
    Vec3 background = Vec3::Zero();
    std::size_t field_size = 0;
};

/// Front-to-back alpha compositing of every projected primitive. Throws
/// RenderError naming the first primitive with non-finite parameters.
RenderOutput render(const GaussianField& field, const Camera& camera, const Vec3& background);

/// Gradients of the loss with respect to the stored parameters, plus the
/// screen-space mean gradient used by densification.
struct RenderGradients {
    ParameterArrays params;
    /// dL/d(mean2d) in NDC units (pixel gradient scaled by width/2, height/2).
    std::vector<Eigen::Vector2d> mean2d;
    /// Whether the primitive was projected (not culled) in this render.
    std::vector<bool> visible;
};

/// Adjoint of render. `grad_depth` may be null. Throws std::invalid_argument
/// on shape mismatch or when `output` does not belong to `field`.
RenderGradients render_backward(const GaussianField& field, const Camera& camera,
                                const RenderOutput& output, const ImageBuffer& grad_color,
                                const ImageBuffer* grad_depth = nullptr);

}  // namespace corgs
