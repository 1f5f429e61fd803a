#pragma once

#include "corgs/rasterizer.hpp"

#include <cmath>

namespace corgs::detail {

/// Rows of pixels handled by one backward task. Fixed so that gradient
/// reductions do not depend on the worker count.
inline constexpr int kRowsPerChunk = 4;

/// Rotation matrix of a unit quaternion (w, x, y, z).
inline Mat3 quaternion_to_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

/// Pixel (x, y) is sampled at its center.
inline double pixel_center(int i) { return static_cast<double>(i) + 0.5; }

/// alpha' = opacity * exp(-0.5 d^T conic d) evaluated at a pixel center,
/// also returning the offsets used by the backward pass.
struct PixelFootprint {
    double dx;
    double dy;
    double gaussian;
    double alpha;
};

inline PixelFootprint evaluate_footprint(const Projected2DGaussian& g, double px, double py) {
    PixelFootprint f;
    f.dx = px - g.mean2d.x();
    f.dy = py - g.mean2d.y();
    const double power = -0.5 * (g.conic[0] * f.dx * f.dx + g.conic[2] * f.dy * f.dy) - g.conic[1] * f.dx * f.dy;
    f.gaussian = std::exp(power);
    f.alpha = g.opacity * f.gaussian;
    return f;
}

/// Half extents of the pixel box that contains every pixel with
/// alpha' >= kMinAlpha. Zero when the opacity cannot reach the threshold.
inline Eigen::Vector2d footprint_extent(const Eigen::Vector3d& cov2d, double opacity) {
    const double ratio = opacity / kMinAlpha;
    if (ratio <= 1.0) {
        return Eigen::Vector2d::Zero();
    }
    const double level = 2.0 * std::log(ratio);
    // Small slack so that pixels exactly on the boundary are never excluded.
    return {std::sqrt(level * cov2d[0]) * (1.0 + 1e-9) + 1e-9, std::sqrt(level * cov2d[2]) * (1.0 + 1e-9) + 1e-9};
}

}  // namespace corgs::detail
