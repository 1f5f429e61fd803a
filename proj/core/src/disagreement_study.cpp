#include "corgs/disagreement_study.hpp"

#include "corgs/metrics.hpp"
#include "corgs/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace corgs {

std::vector<bool> mask_top_scores(std::span<const double> scores, double percentile) {
    if (!(percentile >= 0.0 && percentile < 100.0)) {
        throw std::invalid_argument("disagreement study: percentile must lie in [0, 100)");
    }
    const std::size_t n = scores.size();
    const auto n_masked = static_cast<std::size_t>(std::floor(percentile * static_cast<double>(n) / 100.0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<bool> keep(n, true);
    for (std::size_t k = 0; k < n_masked; ++k) {
        keep[order[k]] = false;
    }
    return keep;
}

std::vector<double> default_study_percentiles() {
    std::vector<double> p;
    for (int i = 0; i < 10; ++i) {
        p.push_back(10.0 * i);
    }
    return p;
}

std::vector<StudyRow> disagreement_study(const GaussianField& field_a, const GaussianField& field_b,
                                         const StudyInputs& inputs, std::span<const double> percentiles,
                                         const Vec3& background, DisagreementScore score) {
    if (inputs.views.size() != inputs.gt_images.size()) {
        throw std::invalid_argument("disagreement study: one ground-truth image per view required");
    }
    if (!inputs.gt_depths.empty() && inputs.gt_depths.size() != inputs.views.size()) {
        throw std::invalid_argument("disagreement study: one ground-truth depth per view required");
    }
    for (double p : percentiles) {
        if (!(p >= 0.0 && p < 100.0)) {
            throw std::invalid_argument("disagreement study: percentile must lie in [0, 100)");
        }
    }

    std::vector<StudyRow> rows;
    for (std::size_t v = 0; v < inputs.views.size(); ++v) {
        const RenderOutput ra = render(field_a, inputs.views[v], background);
        const RenderOutput rb = render(field_b, inputs.views[v], background);
        const std::size_t n_pixels = ra.color.pixel_count();

        std::vector<double> scores(n_pixels);
        for (std::size_t p = 0; p < n_pixels; ++p) {
            if (score == DisagreementScore::Color) {
                double s = 0.0;
                for (int c = 0; c < 3; ++c) {
                    s += std::abs(ra.color.pixels[3 * p + c] - rb.color.pixels[3 * p + c]);
                }
                scores[p] = s / 3.0;
            } else {
                const double db = rb.depth.pixels[p];
                scores[p] = std::abs(ra.depth.pixels[p] - db) / std::max(db, kDepthEpsilon);
            }
        }

        std::vector<bool> depth_valid;
        if (!inputs.gt_depths.empty()) {
            depth_valid = depth_valid_mask(inputs.gt_depths[v], {&ra.accum_alpha});
        }
        for (double percentile : percentiles) {
            const auto keep = mask_top_scores(scores, percentile);
            StudyRow row;
            row.view = static_cast<int>(v);
            row.percentile = percentile;
            row.kept_pixels = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
            row.psnr = psnr_masked(ra.color, inputs.gt_images[v], keep);
            row.abs_error_rel = std::numeric_limits<double>::quiet_NaN();
            if (!depth_valid.empty()) {
                std::vector<bool> valid(n_pixels);
                for (std::size_t p = 0; p < n_pixels; ++p) {
                    valid[p] = keep[p] && depth_valid[p];
                }
                row.abs_error_rel = abs_error_rel(ra.depth, inputs.gt_depths[v], valid);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<double> mean_psnr_by_percentile(std::span<const StudyRow> rows, std::span<const double> percentiles) {
    std::vector<double> means;
    for (double p : percentiles) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (r.percentile == p && !std::isnan(r.psnr)) {
                sum += r.psnr;
                ++n;
            }
        }
        means.push_back(n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
    }
    return means;
}

}  // namespace corgs
