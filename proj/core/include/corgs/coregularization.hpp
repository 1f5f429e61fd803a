#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"
#include "corgs/losses.hpp"
#include "corgs/optimizer.hpp"

#include <array>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace corgs {

/// Nearest-neighbor correspondence from every source primitive into a
/// target field.
struct MatchResult {
    std::vector<std::int64_t> matched_index;  // -1 when the target is empty
    std::vector<double> distance;             // +inf when the target is empty
    std::vector<bool> nonmatching;            // distance > tau (all set for empty target)
    double tau = 0.0;
};

/// Exact 1-NN of each source position among target positions (KD-tree).
/// Flags are set for distance > tau; with an empty target every source is
/// flagged and distances are infinite.
MatchResult knn_match(const GaussianField& source, const GaussianField& target,
                      double tau = std::numeric_limits<double>::infinity());

/// M_i = 1 iff distance_i > tau (strict). Throws std::invalid_argument if
/// tau <= 0.
std::vector<bool> nonmatching_mask(const MatchResult& match, double tau);

struct CoPruneReport {
    std::vector<std::size_t> n_pruned;
    /// Set when pruning would have emptied the field; that field is left untouched.
    std::vector<bool> guard_fired;
    std::vector<std::string> warnings;
};

/// Per-field prune masks: a primitive is marked when it is nonmatching with
/// respect to any other field. Computed on the given snapshots only.
std::vector<std::vector<bool>> co_prune_masks(std::span<const GaussianField> fields, double tau);

/// Removes every marked primitive from each field (and its optimizer rows).
/// All masks are computed before any removal. `states` may be empty;
/// otherwise it must have one entry per field. Throws std::invalid_argument
/// for fewer than two fields or tau <= 0.
CoPruneReport co_prune(std::span<GaussianField> fields, std::span<OptimizerState> states, double tau);

struct PseudoView {
    Camera camera;
    std::array<int, 2> parents{0, 0};
};

/// Index of the training camera whose center is nearest to camera `i`'s
/// center (excluding i; ties to the lowest index).
int nearest_camera(std::span<const Camera> cameras, int i);

/// Picks a random training camera and its nearest neighbor, places the
/// pseudo camera at the midpoint of their centers plus Gaussian noise with
/// standard deviation noise_scale * (pair distance), and orients it with
/// the halfway slerp of the two rotations. Throws std::invalid_argument
/// with fewer than two cameras.
PseudoView sample_pseudo_view(std::span<const Camera> train_cameras, std::mt19937_64& rng, double noise_scale);

/// The same construction without noise for a fixed parent pair.
PseudoView pseudo_view_between(std::span<const Camera> train_cameras, int first, int second,
                               const Eigen::Vector3d& noise = Eigen::Vector3d::Zero());

/// Noise-free pseudo views for every (camera, nearest neighbor) pair,
/// deduplicated. Used to measure rendering disagreement at unseen views.
std::vector<PseudoView> midpoint_pseudo_views(std::span<const Camera> train_cameras);

/// R_pcolor between two renders of the same pseudo view. Gradients flow to
/// both renders.
ImagePairLoss color_coreg_loss(const ImageBuffer& render_a, const ImageBuffer& render_b, double lambda_dssim);

struct TotalLoss {
    double value = 0.0;
    double color_term = 0.0;
    double pseudo_term = 0.0;
    ImageBuffer grad_train;
    /// Empty when no pseudo renders were supplied.
    ImageBuffer grad_pseudo_a;
    ImageBuffer grad_pseudo_b;
};

/// L = L_color(train_render, train_gt) + lambda_pseudo * R_pcolor(pseudo_a, pseudo_b).
/// Pass null pseudo renders before pseudo-view co-regularization is active.
TotalLoss total_loss(const ImageBuffer& train_render, const ImageBuffer& train_gt, const ImageBuffer* pseudo_a,
                     const ImageBuffer* pseudo_b, double lambda_dssim, double lambda_pseudo);

struct PearsonLoss {
    double value = 0.0;
    bool degenerate = false;
    ImageBuffer grad_a;
    ImageBuffer grad_b;
};

/// 1 - Pearson(depth_a, depth_b) over valid pixels, in [0, 2]. Constant
/// input on the valid set yields 0 with `degenerate` set. Throws
/// std::invalid_argument with fewer than two valid pixels.
PearsonLoss pearson_depth_coreg(const ImageBuffer& depth_a, const ImageBuffer& depth_b,
                                const std::vector<bool>& valid);

}  // namespace corgs
