#include "corgs/rasterizer.hpp"

#include "corgs/errors.hpp"
#include "corgs/parallel.hpp"
#include "rasterizer_internal.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace corgs {

std::optional<Projected2DGaussian> project_gaussian(const GaussianField& field, std::size_t index,
                                                    const Camera& camera) {
    const Mat3 world_to_cam = camera.rotation_matrix();
    const Vec3 p = world_to_cam * field.positions[index] + camera.translation;
    if (p.z() <= kNearPlane) {
        return std::nullopt;
    }
    const auto& k = camera.intrinsics;
    const double inv_z = 1.0 / p.z();

    const Vec4 q = field.rotations[index].normalized();
    const Mat3 m = detail::quaternion_to_matrix(q) * field.scale(index).asDiagonal();
    const Mat3 sigma = m * m.transpose();

    Eigen::Matrix<double, 2, 3> jacobian;
    jacobian << k.fx * inv_z, 0.0, -k.fx * p.x() * inv_z * inv_z,
        0.0, k.fy * inv_z, -k.fy * p.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> t = jacobian * world_to_cam;
    Eigen::Matrix2d cov = t * sigma * t.transpose();
    cov(0, 0) += kLowPassFilter;
    cov(1, 1) += kLowPassFilter;

    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 0.0)) {
        return std::nullopt;
    }

    Projected2DGaussian g;
    g.camera_position = p;
    g.depth = p.z();
    g.mean2d = {k.fx * p.x() * inv_z + k.cx, k.fy * p.y() * inv_z + k.cy};
    g.cov2d = {cov(0, 0), cov(0, 1), cov(1, 1)};
    g.conic = {cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det};
    g.opacity = field.opacity(index);
    g.color = field.color(index);
    g.source_index = static_cast<std::uint32_t>(index);

    const Eigen::Vector2d extent = detail::footprint_extent(g.cov2d, g.opacity);
    if (extent.x() <= 0.0) {
        return std::nullopt;
    }
    g.radius = extent.maxCoeff();
    // No pixel center inside the footprint box.
    if (g.mean2d.x() + extent.x() < 0.5 || g.mean2d.x() - extent.x() > k.width - 0.5 ||
        g.mean2d.y() + extent.y() < 0.5 || g.mean2d.y() - extent.y() > k.height - 0.5) {
        return std::nullopt;
    }
    return g;
}

namespace {

void check_finite(const GaussianField& field) {
    if (!field.consistent()) {
        throw std::invalid_argument("render: gaussian field arrays have different lengths");
    }
    for (std::size_t i = 0; i < field.size(); ++i) {
        const bool finite = field.positions[i].allFinite() && field.log_scales[i].allFinite() &&
                            field.rotations[i].allFinite() && std::isfinite(field.opacities[i]) &&
                            field.colors[i].allFinite() && field.rotations[i].squaredNorm() > 0.0;
        if (!finite) {
            throw RenderError("render: primitive " + std::to_string(i) + " has non-finite parameters", i);
        }
    }
}

/// Indices into `projected` whose footprint box covers row `y`, in sorted order.
std::vector<std::uint32_t> row_candidates(const std::vector<Projected2DGaussian>& projected,
                                          const std::vector<Eigen::Vector2d>& extents, int y) {
    const double py = detail::pixel_center(y);
    std::vector<std::uint32_t> ids;
    for (std::uint32_t j = 0; j < projected.size(); ++j) {
        if (std::abs(py - projected[j].mean2d.y()) <= extents[j].y()) {
            ids.push_back(j);
        }
    }
    return ids;
}

}  // namespace

RenderOutput render(const GaussianField& field, const Camera& camera, const Vec3& background) {
    camera.validate();
    check_finite(field);
    const int width = camera.width();
    const int height = camera.height();

    RenderOutput out;
    out.color = ImageBuffer(width, height, 3);
    out.depth = ImageBuffer(width, height, 1);
    out.accum_alpha = ImageBuffer(width, height, 1);
    out.transmittance = ImageBuffer(width, height, 1);
    out.background = background;
    out.field_size = field.size();
    out.rows.resize(static_cast<std::size_t>(height));

    for (std::size_t i = 0; i < field.size(); ++i) {
        if (auto g = project_gaussian(field, i, camera)) {
            out.projected.push_back(*g);
        }
    }
    // Source order is already ascending, so a stable sort breaks depth ties by index.
    std::stable_sort(out.projected.begin(), out.projected.end(),
                     [](const Projected2DGaussian& a, const Projected2DGaussian& b) { return a.depth < b.depth; });

    std::vector<Eigen::Vector2d> extents(out.projected.size());
    for (std::size_t j = 0; j < out.projected.size(); ++j) {
        extents[j] = detail::footprint_extent(out.projected[j].cov2d, out.projected[j].opacity);
    }

    parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        const std::vector<std::uint32_t> candidates = row_candidates(out.projected, extents, y);
        RowContributors& contributors = out.rows[row];
        contributors.offsets.assign(static_cast<std::size_t>(width) + 1, 0);
        const double py = detail::pixel_center(y);

        for (int x = 0; x < width; ++x) {
            const double px = detail::pixel_center(x);
            double transmittance = 1.0;
            Vec3 color = Vec3::Zero();
            double depth_sum = 0.0;
            double alpha_sum = 0.0;
            for (std::uint32_t j : candidates) {
                const auto& g = out.projected[j];
                if (std::abs(px - g.mean2d.x()) > extents[j].x()) {
                    continue;
                }
                const auto f = detail::evaluate_footprint(g, px, py);
                if (f.alpha < kMinAlpha) {
                    continue;
                }
                const double weight = f.alpha * transmittance;
                color += weight * g.color;
                depth_sum += weight * g.depth;
                alpha_sum += weight;
                contributors.ids.push_back(j);
                transmittance *= 1.0 - f.alpha;
                if (transmittance < kTransmittanceCutoff) {
                    break;
                }
            }
            contributors.offsets[static_cast<std::size_t>(x) + 1] = static_cast<std::uint32_t>(contributors.ids.size());
            color += transmittance * background;
            for (int c = 0; c < 3; ++c) {
                out.color.at(x, y, c) = color[c];
            }
            out.accum_alpha.at(x, y) = alpha_sum;
            out.transmittance.at(x, y) = transmittance;
            out.depth.at(x, y) = depth_sum / std::max(alpha_sum, kDepthEpsilon);
        }
    });
    return out;
}

}  // namespace corgs
