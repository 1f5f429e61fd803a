#include "corgs/densification.hpp"

#include "rasterizer_internal.hpp"

#include <cmath>
#include <stdexcept>

namespace corgs {

void GradientStats::reset(std::size_t n) {
    accumulated.assign(n, 0.0);
    count.assign(n, 0);
}

void GradientStats::add(const RenderGradients& grads) {
    if (grads.mean2d.size() != accumulated.size()) {
        throw std::invalid_argument("GradientStats::add: size mismatch");
    }
    for (std::size_t i = 0; i < accumulated.size(); ++i) {
        if (grads.visible[i]) {
            accumulated[i] += grads.mean2d[i].norm();
            ++count[i];
        }
    }
}

std::vector<double> GradientStats::average() const {
    std::vector<double> avg(accumulated.size(), 0.0);
    for (std::size_t i = 0; i < avg.size(); ++i) {
        if (count[i] > 0) {
            avg[i] = accumulated[i] / count[i];
        }
    }
    return avg;
}

DensifyReport densify_and_prune(GaussianField& field, OptimizerState& state, std::span<const double> grad_norms,
                                const DensifyParams& params, double scene_extent, std::mt19937_64& rng) {
    const std::size_t n = field.size();
    if (grad_norms.size() != n || state.size() != n) {
        throw std::invalid_argument("densify_and_prune: gradient statistics or optimizer rows do not match the field");
    }
    DensifyReport report;
    const double size_limit = params.percent_dense * scene_extent;
    const double log_divisor = std::log(params.split_scale_divisor);

    std::vector<bool> split_parent(n, false);
    GaussianField added;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(grad_norms[i] > params.grad_threshold)) {
            continue;
        }
        if (field.scale(i).maxCoeff() <= size_limit) {
            added.append_row(field, i);
            ++report.n_cloned;
        } else {
            split_parent[i] = true;
            ++report.n_split;
        }
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!split_parent[i]) {
            continue;
        }
        const Vec3 scale = field.scale(i);
        const Mat3 rot = detail::quaternion_to_matrix(field.rotations[i].normalized());
        for (int child = 0; child < params.split_children; ++child) {
            Vec3 z;
            for (int k = 0; k < 3; ++k) {
                z[k] = normal(rng);
            }
            added.append_row(field, i);
            added.positions.back() = field.positions[i] + rot * scale.cwiseProduct(z);
            added.log_scales.back() = field.log_scales[i] - Vec3::Constant(log_divisor);
        }
    }

    field.append(added);
    state.add_zero_rows(added.size());

    std::vector<bool> keep(field.size(), true);
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (i < n && split_parent[i]) {
            keep[i] = false;
        } else if (field.opacity(i) < params.prune_opacity_threshold) {
            keep[i] = false;
            ++report.n_pruned;
        }
    }
    field.keep_rows(keep);
    state.keep_rows(keep);
    return report;
}

void reset_opacity(GaussianField& field, OptimizerState& state, double max_opacity) {
    const double cap = logit(max_opacity);
    for (double& o : field.opacities) {
        o = std::min(o, cap);
    }
    state.reset_opacity_moments();
}

}  // namespace corgs
