#include "corgs/metrics.hpp"

#include "corgs/kdtree.hpp"
#include "corgs/parallel.hpp"
#include "corgs/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace corgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double psnr_from_mse(double mse) {
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double mean_ignoring_nan(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    a.require_same_shape(b, "psnr");
    if (a.pixels.empty()) {
        return kPsnrCap;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    return psnr_from_mse(sum / static_cast<double>(a.pixels.size()));
}

double psnr_masked(const ImageBuffer& a, const ImageBuffer& b, const std::vector<bool>& keep) {
    a.require_same_shape(b, "psnr_masked");
    if (keep.size() != a.pixel_count()) {
        throw std::invalid_argument("psnr_masked: mask size does not match image");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < keep.size(); ++p) {
        if (!keep[p]) {
            continue;
        }
        for (int c = 0; c < a.channels; ++c) {
            const std::size_t i = p * static_cast<std::size_t>(a.channels) + c;
            const double d = a.pixels[i] - b.pixels[i];
            sum += d * d;
        }
        n += static_cast<std::size_t>(a.channels);
    }
    if (n == 0) {
        return kNaN;
    }
    return psnr_from_mse(sum / static_cast<double>(n));
}

RegistrationScore registration_score(std::span<const Vec3> source, std::span<const Vec3> target, double tau) {
    RegistrationScore score;
    if (source.empty()) {
        score.rmse = kNaN;
        return score;
    }
    const KdTree3 tree(target);
    double sum_sq = 0.0;
    for (const auto& p : source) {
        const auto nn = tree.nearest(p);
        if (std::sqrt(nn.squared_distance) <= tau) {
            ++score.inliers;
            sum_sq += nn.squared_distance;
        }
    }
    score.fitness = static_cast<double>(score.inliers) / static_cast<double>(source.size());
    score.rmse = score.inliers > 0 ? std::sqrt(sum_sq / static_cast<double>(score.inliers)) : kNaN;
    return score;
}

FitnessRmse fitness_rmse(const GaussianField& a, const GaussianField& b, double tau) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("fitness_rmse: both fields must be nonempty");
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("fitness_rmse: tau must be positive");
    }
    FitnessRmse r;
    r.forward = registration_score(a.positions, b.positions, tau);
    r.backward = registration_score(b.positions, a.positions, tau);
    r.fitness = 0.5 * (r.forward.fitness + r.backward.fitness);
    const double rmses[] = {r.forward.rmse, r.backward.rmse};
    r.rmse = mean_ignoring_nan(rmses);
    return r;
}

double abs_error_rel(const ImageBuffer& pred, const ImageBuffer& gt, const std::vector<bool>& valid) {
    pred.require_same_shape(gt, "abs_error_rel");
    if (valid.size() != gt.pixel_count() || gt.channels != 1) {
        throw std::invalid_argument("abs_error_rel: expects single-channel depth and a full-size mask");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (!valid[i]) {
            continue;
        }
        if (!(gt.pixels[i] > 0.0)) {
            throw std::invalid_argument("abs_error_rel: ground-truth depth must be positive on valid pixels");
        }
        sum += std::abs(pred.pixels[i] - gt.pixels[i]) / gt.pixels[i];
        ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

std::vector<bool> depth_valid_mask(const ImageBuffer& gt_depth, std::initializer_list<const ImageBuffer*> alphas) {
    std::vector<bool> valid(gt_depth.pixel_count());
    for (std::size_t i = 0; i < valid.size(); ++i) {
        bool ok = gt_depth.pixels[i] > 0.0;
        for (const ImageBuffer* alpha : alphas) {
            ok = ok && alpha->pixels[i] >= kDepthValidAlpha;
        }
        valid[i] = ok;
    }
    return valid;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("spearman: length mismatch");
    }
    if (x.size() < 2) {
        return kNaN;
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return kNaN;
    }
    return sxy / std::sqrt(sxx * syy);
}

EvaluationSummary evaluate(const GaussianField& field, const SceneDataset& dataset, std::optional<double> tau) {
    if (dataset.test_cameras.empty()) {
        throw std::invalid_argument("evaluate: dataset has no test views");
    }
    EvaluationSummary summary;
    summary.gaussian_count = field.size();
    summary.views.resize(dataset.test_cameras.size());
    for (std::size_t v = 0; v < dataset.test_cameras.size(); ++v) {
        const RenderOutput out = render(field, dataset.test_cameras[v], dataset.background);
        ViewEvaluation& e = summary.views[v];
        e.view = static_cast<int>(v);
        e.psnr = psnr(out.color, dataset.test_images[v]);
        e.ssim = ssim(out.color, dataset.test_images[v]);
        e.abs_error_rel = kNaN;
        if (v < dataset.test_depths.size()) {
            const auto valid = depth_valid_mask(dataset.test_depths[v], {&out.accum_alpha});
            e.abs_error_rel = abs_error_rel(out.depth, dataset.test_depths[v], valid);
        }
    }
    std::vector<double> p, s, d;
    for (const auto& e : summary.views) {
        p.push_back(e.psnr);
        s.push_back(e.ssim);
        d.push_back(e.abs_error_rel);
    }
    summary.mean_psnr = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    summary.mean_ssim = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    summary.mean_abs_error_rel = mean_ignoring_nan(d);
    if (tau) {
        if (!dataset.ground_truth_field) {
            throw std::invalid_argument("evaluate: fitness/RMSE requested but the dataset has no ground-truth field");
        }
        if (!field.empty() && !dataset.ground_truth_field->empty()) {
            summary.geometry = fitness_rmse(field, *dataset.ground_truth_field, *tau);
        }
    }
    return summary;
}

double DisagreementReport::mean_psnr_between() const {
    return mean_ignoring_nan(psnr_between);
}

double DisagreementReport::mean_depth_abs_error_rel() const {
    return mean_ignoring_nan(depth_abs_error_rel);
}

DisagreementReport measure_disagreement(const GaussianField& a, const GaussianField& b,
                                        std::span<const Camera> views, const Vec3& background, double tau) {
    DisagreementReport report;
    if (!a.empty() && !b.empty()) {
        const auto fr = fitness_rmse(a, b, tau);
        report.fitness = fr.fitness;
        report.rmse = fr.rmse;
    } else {
        report.fitness = 0.0;
        report.rmse = kNaN;
    }
    for (std::size_t v = 0; v < views.size(); ++v) {
        const RenderOutput ra = render(a, views[v], background);
        const RenderOutput rb = render(b, views[v], background);
        report.view_ids.push_back(static_cast<int>(v));
        report.psnr_between.push_back(psnr(ra.color, rb.color));
        std::vector<bool> valid(ra.depth.pixel_count());
        for (std::size_t i = 0; i < valid.size(); ++i) {
            valid[i] = ra.accum_alpha.pixels[i] >= kDepthValidAlpha && rb.accum_alpha.pixels[i] >= kDepthValidAlpha &&
                       ra.depth.pixels[i] > 0.0;
        }
        report.depth_abs_error_rel.push_back(abs_error_rel(rb.depth, ra.depth, valid));
    }
    return report;
}

}  // namespace corgs
