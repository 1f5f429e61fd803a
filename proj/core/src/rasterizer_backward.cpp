#include "corgs/parallel.hpp"
#include "corgs/rasterizer.hpp"
#include "rasterizer_internal.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace corgs {

namespace {

/// Screen-space gradient accumulators for one projected primitive.
struct ScreenGrad {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double conic_a = 0.0;
    double conic_b = 0.0;
    double conic_c = 0.0;
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    double depth = 0.0;

    void add(const ScreenGrad& o) {
        mean_x += o.mean_x;
        mean_y += o.mean_y;
        conic_a += o.conic_a;
        conic_b += o.conic_b;
        conic_c += o.conic_c;
        opacity += o.opacity;
        color += o.color;
        depth += o.depth;
    }
};

struct Contribution {
    std::uint32_t id;
    detail::PixelFootprint footprint;
    double transmittance;  // before this primitive
};

void backward_pixel(const RenderOutput& out, int x, int y, const Vec3& grad_color, double grad_depth_out,
                    std::vector<Contribution>& scratch, std::vector<ScreenGrad>& grads) {
    const RowContributors& row = out.rows[static_cast<std::size_t>(y)];
    const std::uint32_t begin = row.offsets[static_cast<std::size_t>(x)];
    const std::uint32_t end = row.offsets[static_cast<std::size_t>(x) + 1];
    if (begin == end) {
        return;
    }
    const double px = detail::pixel_center(x);
    const double py = detail::pixel_center(y);

    // Replay the forward pass to recover per-contributor transmittance and sums.
    scratch.clear();
    double transmittance = 1.0;
    double depth_sum = 0.0;
    double alpha_sum = 0.0;
    for (std::uint32_t k = begin; k < end; ++k) {
        const std::uint32_t id = row.ids[k];
        const auto& g = out.projected[id];
        const auto f = detail::evaluate_footprint(g, px, py);
        scratch.push_back({id, f, transmittance});
        const double weight = f.alpha * transmittance;
        depth_sum += weight * g.depth;
        alpha_sum += weight;
        transmittance *= 1.0 - f.alpha;
    }

    // depth = depth_sum / max(alpha_sum, eps)
    const double alpha_eff = std::max(alpha_sum, kDepthEpsilon);
    const double grad_depth_sum = grad_depth_out / alpha_eff;
    const double grad_alpha_sum = alpha_sum > kDepthEpsilon ? -grad_depth_out * depth_sum / (alpha_eff * alpha_eff) : 0.0;

    // Back-to-front: "rest" terms are what lies behind the current primitive.
    Vec3 rest_color = out.background;
    double rest_depth = 0.0;
    double rest_alpha = 0.0;
    for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) {
        const auto& g = out.projected[it->id];
        const double alpha = it->footprint.alpha;
        const double t = it->transmittance;
        const double weight = alpha * t;

        const double grad_alpha = t * (grad_color.dot(g.color - rest_color) + grad_depth_sum * (g.depth - rest_depth) +
                                       grad_alpha_sum * (1.0 - rest_alpha));

        ScreenGrad& acc = grads[it->id];
        acc.color += weight * grad_color;
        acc.depth += weight * grad_depth_sum;
        acc.opacity += grad_alpha * it->footprint.gaussian;

        const double grad_power = grad_alpha * alpha;
        const double dx = it->footprint.dx;
        const double dy = it->footprint.dy;
        const auto& conic = g.conic;
        acc.mean_x += grad_power * (conic[0] * dx + conic[1] * dy);
        acc.mean_y += grad_power * (conic[1] * dx + conic[2] * dy);
        acc.conic_a += grad_power * (-0.5 * dx * dx);
        acc.conic_b += grad_power * (-dx * dy);
        acc.conic_c += grad_power * (-0.5 * dy * dy);

        rest_color = alpha * g.color + (1.0 - alpha) * rest_color;
        rest_depth = alpha * g.depth + (1.0 - alpha) * rest_depth;
        rest_alpha = alpha + (1.0 - alpha) * rest_alpha;
    }
}

/// Chain rule from screen-space gradients to the stored parameters of one primitive.
void backward_primitive(const GaussianField& field, const Camera& camera, const Projected2DGaussian& g,
                        const ScreenGrad& sg, RenderGradients& out) {
    const std::size_t i = g.source_index;
    const auto& k = camera.intrinsics;
    const Mat3 world_to_cam = camera.rotation_matrix();
    const Vec3& p = g.camera_position;
    const double inv_z = 1.0 / p.z();
    const double inv_z2 = inv_z * inv_z;

    // conic = inverse(cov2d)
    const double a = g.cov2d[0];
    const double b = g.cov2d[1];
    const double c = g.cov2d[2];
    const double det = a * c - b * b;
    const double inv_det2 = 1.0 / (det * det);
    const double grad_a = inv_det2 * (-c * c * sg.conic_a + b * c * sg.conic_b - b * b * sg.conic_c);
    const double grad_b =
        inv_det2 * (2.0 * b * c * sg.conic_a - (a * c + b * b) * sg.conic_b + 2.0 * a * b * sg.conic_c);
    const double grad_c = inv_det2 * (-b * b * sg.conic_a + a * b * sg.conic_b - a * a * sg.conic_c);

    // cov2d = T Sigma T^T + low-pass, T = J W
    const Vec4 q = field.rotations[i].normalized();
    const Mat3 rot = detail::quaternion_to_matrix(q);
    const Vec3 scale = field.scale(i);
    const Mat3 m = rot * scale.asDiagonal();
    const Mat3 sigma = m * m.transpose();

    Eigen::Matrix<double, 2, 3> jacobian;
    jacobian << k.fx * inv_z, 0.0, -k.fx * p.x() * inv_z2,
        0.0, k.fy * inv_z, -k.fy * p.y() * inv_z2;
    const Eigen::Matrix<double, 2, 3> t = jacobian * world_to_cam;

    Eigen::Matrix2d grad_cov;
    grad_cov << grad_a, 0.5 * grad_b, 0.5 * grad_b, grad_c;
    const Mat3 grad_sigma = t.transpose() * grad_cov * t;
    const Eigen::Matrix<double, 2, 3> grad_t = 2.0 * grad_cov * t * sigma;
    const Eigen::Matrix<double, 2, 3> grad_j = grad_t * world_to_cam.transpose();

    // Camera-space position.
    Vec3 grad_p(0.0, 0.0, sg.depth);
    grad_p.x() += sg.mean_x * k.fx * inv_z;
    grad_p.y() += sg.mean_y * k.fy * inv_z;
    grad_p.z() += -sg.mean_x * k.fx * p.x() * inv_z2 - sg.mean_y * k.fy * p.y() * inv_z2;
    grad_p.x() += grad_j(0, 2) * (-k.fx * inv_z2);
    grad_p.y() += grad_j(1, 2) * (-k.fy * inv_z2);
    grad_p.z() += grad_j(0, 0) * (-k.fx * inv_z2) + grad_j(0, 2) * (2.0 * k.fx * p.x() * inv_z2 * inv_z) +
                  grad_j(1, 1) * (-k.fy * inv_z2) + grad_j(1, 2) * (2.0 * k.fy * p.y() * inv_z2 * inv_z);
    out.params.positions[i] = world_to_cam.transpose() * grad_p;

    // Sigma = M M^T, M = R diag(s)
    const Mat3 grad_m = 2.0 * grad_sigma * m;
    Vec3 grad_log_scale;
    Mat3 grad_rot;
    for (int col = 0; col < 3; ++col) {
        grad_log_scale[col] = grad_m.col(col).dot(rot.col(col)) * scale[col];
        grad_rot.col(col) = grad_m.col(col) * scale[col];
    }
    out.params.log_scales[i] = grad_log_scale;

    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const Mat3& r = grad_rot;
    Vec4 grad_q;
    grad_q[0] = 2.0 * (-z * r(0, 1) + y * r(0, 2) + z * r(1, 0) - x * r(1, 2) - y * r(2, 0) + x * r(2, 1));
    grad_q[1] = 2.0 * (y * r(0, 1) + z * r(0, 2) + y * r(1, 0) - 2.0 * x * r(1, 1) - w * r(1, 2) + z * r(2, 0) +
                       w * r(2, 1) - 2.0 * x * r(2, 2));
    grad_q[2] = 2.0 * (-2.0 * y * r(0, 0) + x * r(0, 1) + w * r(0, 2) + x * r(1, 0) + z * r(1, 2) - w * r(2, 0) +
                       z * r(2, 1) - 2.0 * y * r(2, 2));
    grad_q[3] = 2.0 * (-2.0 * z * r(0, 0) - w * r(0, 1) + x * r(0, 2) + w * r(1, 0) - 2.0 * z * r(1, 1) +
                       y * r(1, 2) + x * r(2, 0) + y * r(2, 1));
    const double raw_norm = field.rotations[i].norm();
    out.params.rotations[i] = (grad_q - q * q.dot(grad_q)) / raw_norm;

    out.params.opacities[i] = sg.opacity * g.opacity * (1.0 - g.opacity);
    out.params.colors[i] = sg.color.cwiseProduct(g.color.cwiseProduct(Vec3::Ones() - g.color));
    out.mean2d[i] = {sg.mean_x * 0.5 * k.width, sg.mean_y * 0.5 * k.height};
}

}  // namespace

RenderGradients render_backward(const GaussianField& field, const Camera& camera, const RenderOutput& output,
                                const ImageBuffer& grad_color, const ImageBuffer* grad_depth) {
    const int width = camera.width();
    const int height = camera.height();
    if (output.field_size != field.size()) {
        throw std::invalid_argument("render_backward: render output belongs to a field of different size");
    }
    if (!output.color.same_shape(ImageBuffer(width, height, 3)) || output.rows.size() != static_cast<std::size_t>(height)) {
        throw std::invalid_argument("render_backward: render output does not match camera resolution");
    }
    output.color.require_same_shape(grad_color, "render_backward color gradient");
    if (grad_depth != nullptr) {
        output.depth.require_same_shape(*grad_depth, "render_backward depth gradient");
    }

    const std::size_t n_proj = output.projected.size();
    const std::size_t n_chunks = (static_cast<std::size_t>(height) + detail::kRowsPerChunk - 1) / detail::kRowsPerChunk;
    std::vector<std::vector<ScreenGrad>> chunk_grads(n_chunks);

    parallel_for(n_chunks, [&](std::size_t chunk) {
        auto& grads = chunk_grads[chunk];
        grads.assign(n_proj, ScreenGrad{});
        std::vector<Contribution> scratch;
        const int y0 = static_cast<int>(chunk) * detail::kRowsPerChunk;
        const int y1 = std::min(height, y0 + detail::kRowsPerChunk);
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < width; ++x) {
                const Vec3 gc(grad_color.at(x, y, 0), grad_color.at(x, y, 1), grad_color.at(x, y, 2));
                const double gd = grad_depth != nullptr ? grad_depth->at(x, y) : 0.0;
                if (gc.isZero(0.0) && gd == 0.0) {
                    continue;
                }
                backward_pixel(output, x, y, gc, gd, scratch, grads);
            }
        }
    });

    // Fixed-order reduction keeps results independent of the worker count.
    std::vector<ScreenGrad> total(n_proj);
    for (const auto& grads : chunk_grads) {
        for (std::size_t j = 0; j < n_proj; ++j) {
            total[j].add(grads[j]);
        }
    }

    RenderGradients result;
    result.params = ParameterArrays::zeros(field.size());
    result.mean2d.assign(field.size(), Eigen::Vector2d::Zero());
    result.visible.assign(field.size(), false);
    for (std::size_t j = 0; j < n_proj; ++j) {
        result.visible[output.projected[j].source_index] = true;
    }
    parallel_for(n_proj, [&](std::size_t j) {
        backward_primitive(field, camera, output.projected[j], total[j], result);
    });
    return result;
}

}  // namespace corgs
