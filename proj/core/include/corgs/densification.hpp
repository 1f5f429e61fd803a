#pragma once

#include "corgs/gaussian_field.hpp"
#include "corgs/optimizer.hpp"
#include "corgs/rasterizer.hpp"

#include <random>
#include <span>
#include <vector>

namespace corgs {

struct DensifyParams {
    double grad_threshold = 2e-4;
    /// Clone when the largest activated scale is at most this fraction of
    /// the scene extent, split otherwise.
    double percent_dense = 0.01;
    double prune_opacity_threshold = 0.005;
    int split_children = 2;
    double split_scale_divisor = 1.6;
};

/// Running mean of the screen-space positional gradient norm per primitive,
/// counted over the renders in which it was visible.
struct GradientStats {
    std::vector<double> accumulated;
    std::vector<int> count;

    explicit GradientStats(std::size_t n = 0) : accumulated(n, 0.0), count(n, 0) {}
    void reset(std::size_t n);
    void add(const RenderGradients& grads);
    std::vector<double> average() const;
};

struct DensifyReport {
    std::size_t n_cloned = 0;
    std::size_t n_split = 0;
    std::size_t n_pruned = 0;
};

/// Clones small high-gradient primitives, splits large ones into children
/// sampled from N(mu, Sigma) with scales divided by 1.6, then prunes
/// primitives below the opacity threshold. Optimizer rows follow the field.
DensifyReport densify_and_prune(GaussianField& field, OptimizerState& state, std::span<const double> grad_norms,
                                const DensifyParams& params, double scene_extent, std::mt19937_64& rng);

/// Caps every activated opacity at `max_opacity` and clears its moments.
void reset_opacity(GaussianField& field, OptimizerState& state, double max_opacity = 0.01);

}  // namespace corgs
