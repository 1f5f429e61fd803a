#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"

#include <span>
#include <vector>

namespace corgs {

enum class DisagreementScore {
    /// Mean absolute channel difference between the two color renders.
    Color,
    /// |d_a - d_b| / d_b between the two depth renders.
    Depth,
};

struct StudyRow {
    int view = 0;
    double percentile = 0.0;
    std::size_t kept_pixels = 0;
    double psnr = 0.0;
    /// NaN when no kept pixel has valid depth.
    double abs_error_rel = 0.0;
};

/// Scores every pixel by its disagreement between the two renders and then,
/// for each percentile p, masks out the top p% scoring pixels and measures
/// the quality of `field_a`'s render on what remains. Ties in score are
/// masked in ascending pixel index. Percentiles must lie in [0, 100).
struct StudyInputs {
    std::span<const Camera> views;
    std::span<const ImageBuffer> gt_images;
    /// Optional; empty span disables the depth metric.
    std::span<const ImageBuffer> gt_depths;
};

std::vector<StudyRow> disagreement_study(const GaussianField& field_a, const GaussianField& field_b,
                                         const StudyInputs& inputs, std::span<const double> percentiles,
                                         const Vec3& background, DisagreementScore score = DisagreementScore::Color);

/// Core of the study on precomputed per-pixel data; exposed for testing.
/// `keep` receives the mask for the given percentile.
std::vector<bool> mask_top_scores(std::span<const double> scores, double percentile);

/// Default grid {0, 10, ..., 90}.
std::vector<double> default_study_percentiles();

/// Mean remaining-region PSNR per percentile across views, in percentile order.
std::vector<double> mean_psnr_by_percentile(std::span<const StudyRow> rows, std::span<const double> percentiles);

}  // namespace corgs
