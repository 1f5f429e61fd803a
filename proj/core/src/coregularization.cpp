#include "corgs/coregularization.hpp"

#include "corgs/kdtree.hpp"
#include "corgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corgs {

MatchResult knn_match(const GaussianField& source, const GaussianField& target, double tau) {
    MatchResult match;
    match.tau = tau;
    const std::size_t n = source.size();
    match.matched_index.assign(n, -1);
    match.distance.assign(n, std::numeric_limits<double>::infinity());
    match.nonmatching.assign(n, true);
    if (target.empty()) {
        return match;
    }
    const KdTree3 tree(target.positions);
    for (std::size_t i = 0; i < n; ++i) {
        const auto nn = tree.nearest(source.positions[i]);
        match.matched_index[i] = nn.index;
        match.distance[i] = std::sqrt(nn.squared_distance);
        match.nonmatching[i] = match.distance[i] > tau;
    }
    return match;
}

std::vector<bool> nonmatching_mask(const MatchResult& match, double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("nonmatching_mask: tau must be positive");
    }
    std::vector<bool> mask(match.distance.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = match.distance[i] > tau;
    }
    return mask;
}

std::vector<std::vector<bool>> co_prune_masks(std::span<const GaussianField> fields, double tau) {
    if (fields.size() < 2) {
        throw std::invalid_argument("co_prune: at least two fields required");
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("co_prune: tau must be positive");
    }
    std::vector<std::vector<bool>> masks(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        masks[i].assign(fields[i].size(), false);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (i == j) {
                continue;
            }
            const auto nonmatching = nonmatching_mask(knn_match(fields[i], fields[j]), tau);
            for (std::size_t k = 0; k < nonmatching.size(); ++k) {
                masks[i][k] = masks[i][k] || nonmatching[k];
            }
        }
    }
    return masks;
}

CoPruneReport co_prune(std::span<GaussianField> fields, std::span<OptimizerState> states, double tau) {
    if (!states.empty() && states.size() != fields.size()) {
        throw std::invalid_argument("co_prune: one optimizer state per field required");
    }
    const auto masks = co_prune_masks(std::span<const GaussianField>(fields.data(), fields.size()), tau);

    CoPruneReport report;
    report.n_pruned.assign(fields.size(), 0);
    report.guard_fired.assign(fields.size(), false);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto n_marked = static_cast<std::size_t>(std::count(masks[i].begin(), masks[i].end(), true));
        if (n_marked == 0) {
            continue;
        }
        if (n_marked == fields[i].size()) {
            report.guard_fired[i] = true;
            report.warnings.push_back("co-pruning would remove all " + std::to_string(n_marked) +
                                      " primitives of field " + std::to_string(i) + "; skipped");
            continue;
        }
        std::vector<bool> keep(masks[i].size());
        for (std::size_t k = 0; k < keep.size(); ++k) {
            keep[k] = !masks[i][k];
        }
        fields[i].keep_rows(keep);
        if (!states.empty()) {
            states[i].keep_rows(keep);
        }
        report.n_pruned[i] = n_marked;
    }
    return report;
}

int nearest_camera(std::span<const Camera> cameras, int i) {
    const Eigen::Vector3d c = cameras[static_cast<std::size_t>(i)].center();
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cameras.size(); ++j) {
        if (static_cast<int>(j) == i) {
            continue;
        }
        const double d2 = (cameras[j].center() - c).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(j);
        }
    }
    return best;
}

PseudoView pseudo_view_between(std::span<const Camera> train_cameras, int first, int second,
                               const Eigen::Vector3d& noise) {
    const Camera& a = train_cameras[static_cast<std::size_t>(first)];
    const Camera& b = train_cameras[static_cast<std::size_t>(second)];
    const Eigen::Vector3d ca = a.center();
    const Eigen::Vector3d cb = b.center();
    const Eigen::Vector3d center = 0.5 * (ca + cb) + noise;
    const Eigen::Quaterniond rotation =
        (ca - cb).squaredNorm() == 0.0 ? a.rotation.normalized() : slerp_shortest(a.rotation, b.rotation, 0.5);
    PseudoView view;
    view.camera = Camera::from_center(center, rotation, a.intrinsics);
    view.parents = {first, second};
    return view;
}

PseudoView sample_pseudo_view(std::span<const Camera> train_cameras, std::mt19937_64& rng, double noise_scale) {
    if (train_cameras.size() < 2) {
        throw std::invalid_argument("sample_pseudo_view: at least two training cameras required");
    }
    std::uniform_int_distribution<int> pick(0, static_cast<int>(train_cameras.size()) - 1);
    const int first = pick(rng);
    const int second = nearest_camera(train_cameras, first);
    const double pair_distance =
        (train_cameras[static_cast<std::size_t>(first)].center() - train_cameras[static_cast<std::size_t>(second)].center())
            .norm();
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d noise;
    for (int k = 0; k < 3; ++k) {
        noise[k] = normal(rng);
    }
    noise *= noise_scale * pair_distance;
    return pseudo_view_between(train_cameras, first, second, noise);
}

std::vector<PseudoView> midpoint_pseudo_views(std::span<const Camera> train_cameras) {
    std::vector<PseudoView> views;
    if (train_cameras.size() < 2) {
        return views;
    }
    std::vector<std::pair<int, int>> seen;
    for (int i = 0; i < static_cast<int>(train_cameras.size()); ++i) {
        const int j = nearest_camera(train_cameras, i);
        const std::pair<int, int> key{std::min(i, j), std::max(i, j)};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            continue;
        }
        seen.push_back(key);
        views.push_back(pseudo_view_between(train_cameras, key.first, key.second));
    }
    return views;
}

ImagePairLoss color_coreg_loss(const ImageBuffer& render_a, const ImageBuffer& render_b, double lambda_dssim) {
    return photometric_loss(render_a, render_b, lambda_dssim);
}

TotalLoss total_loss(const ImageBuffer& train_render, const ImageBuffer& train_gt, const ImageBuffer* pseudo_a,
                     const ImageBuffer* pseudo_b, double lambda_dssim, double lambda_pseudo) {
    if ((pseudo_a == nullptr) != (pseudo_b == nullptr)) {
        throw std::invalid_argument("total_loss: pseudo renders must be given as a pair");
    }
    TotalLoss total;
    const ImagePairLoss color = photometric_loss(train_render, train_gt, lambda_dssim);
    total.color_term = color.value;
    total.grad_train = color.grad_a;
    if (pseudo_a != nullptr) {
        const ImagePairLoss reg = color_coreg_loss(*pseudo_a, *pseudo_b, lambda_dssim);
        total.pseudo_term = reg.value;
        total.grad_pseudo_a = reg.grad_a;
        total.grad_pseudo_b = reg.grad_b;
        for (auto& v : total.grad_pseudo_a.pixels) {
            v *= lambda_pseudo;
        }
        for (auto& v : total.grad_pseudo_b.pixels) {
            v *= lambda_pseudo;
        }
    }
    total.value = total.color_term + lambda_pseudo * total.pseudo_term;
    return total;
}

PearsonLoss pearson_depth_coreg(const ImageBuffer& depth_a, const ImageBuffer& depth_b,
                                const std::vector<bool>& valid) {
    depth_a.require_same_shape(depth_b, "pearson_depth_coreg");
    if (valid.size() != depth_a.pixels.size() || depth_a.channels != 1) {
        throw std::invalid_argument("pearson_depth_coreg: expects single-channel depth and a full-size mask");
    }
    PearsonLoss loss;
    loss.grad_a = ImageBuffer(depth_a.width, depth_a.height, 1);
    loss.grad_b = ImageBuffer(depth_a.width, depth_a.height, 1);
    const auto n_valid = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
    if (n_valid < 2) {
        throw std::invalid_argument("pearson_depth_coreg: at least two valid pixels required");
    }
    const double n = static_cast<double>(n_valid);
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (valid[i]) {
            mean_a += depth_a.pixels[i];
            mean_b += depth_b.pixels[i];
        }
    }
    mean_a /= n;
    mean_b /= n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (valid[i]) {
            const double da = depth_a.pixels[i] - mean_a;
            const double db = depth_b.pixels[i] - mean_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    constexpr double kMinVariance = 1e-18;
    if (var_a <= kMinVariance || var_b <= kMinVariance) {
        loss.degenerate = true;
        return loss;
    }
    const double sd_a = std::sqrt(var_a);
    const double sd_b = std::sqrt(var_b);
    const double r = std::clamp(cov / (sd_a * sd_b), -1.0, 1.0);
    loss.value = 1.0 - r;
    // d r / d a_i = ((b_i - mb) / (sa sb) - r (a_i - ma) / sa^2) / n
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (!valid[i]) {
            continue;
        }
        const double da = depth_a.pixels[i] - mean_a;
        const double db = depth_b.pixels[i] - mean_b;
        loss.grad_a.pixels[i] = -(db / (sd_a * sd_b) - r * da / var_a) / n;
        loss.grad_b.pixels[i] = -(da / (sd_a * sd_b) - r * db / var_b) / n;
    }
    return loss;
}

}  // namespace corgs
