#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"
#include "corgs/scene.hpp"

#include <optional>
#include <vector>

namespace corgs {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
/// Depth pixels count as valid when both renders reach this accumulated alpha.
inline constexpr double kDepthValidAlpha = 0.5;

/// -10 log10(MSE) for images in [0,1], capped at 99 dB.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
/// PSNR over the pixels where `keep` is true (all channels of a kept pixel).
double psnr_masked(const ImageBuffer& a, const ImageBuffer& b, const std::vector<bool>& keep);

/// Gaussian-window SSIM (11x11, sigma 1.5) averaged over valid window
/// positions and channels. Requires width, height >= 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);
double dssim(const ImageBuffer& a, const ImageBuffer& b);

struct SsimWithGradient {
    double value = 0.0;
    ImageBuffer grad_a;
    ImageBuffer grad_b;
};
/// SSIM plus its gradient with respect to both inputs.
SsimWithGradient ssim_with_gradient(const ImageBuffer& a, const ImageBuffer& b);

/// Normalized 1-D Gaussian taps of the SSIM window.
std::vector<double> ssim_window_taps();

struct RegistrationScore {
    double fitness = 0.0;
    /// NaN when there are no inliers.
    double rmse = 0.0;
    std::size_t inliers = 0;
};

/// One-directional registration score: fraction of source points whose
/// nearest target point lies within tau, and the RMS of those distances.
RegistrationScore registration_score(std::span<const Vec3> source, std::span<const Vec3> target, double tau);

struct FitnessRmse {
    double fitness = 0.0;
    /// Average of the directional RMSEs that have inliers; NaN if neither does.
    double rmse = 0.0;
    RegistrationScore forward;
    RegistrationScore backward;
};

/// Symmetrized fitness/RMSE (average of a->b and b->a). Throws
/// std::invalid_argument if either field is empty or tau <= 0.
FitnessRmse fitness_rmse(const GaussianField& a, const GaussianField& b, double tau);

/// Mean |pred - gt| / gt over pixels where `valid` is set. Returns NaN when
/// no pixel is valid. Throws std::invalid_argument if gt <= 0 on a valid pixel.
double abs_error_rel(const ImageBuffer& pred, const ImageBuffer& gt, const std::vector<bool>& valid);

/// Valid mask for depth comparison: gt > 0 and every given alpha >= 0.5.
std::vector<bool> depth_valid_mask(const ImageBuffer& gt_depth, std::initializer_list<const ImageBuffer*> alphas);

/// Spearman rank correlation with average ranks for ties. NaN if either
/// input has zero variance.
double spearman(std::span<const double> x, std::span<const double> y);

struct ViewEvaluation {
    int view = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    /// NaN when the dataset has no depth for this view.
    double abs_error_rel = 0.0;
};

struct EvaluationSummary {
    std::vector<ViewEvaluation> views;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_abs_error_rel = 0.0;
    std::optional<FitnessRmse> geometry;
    std::size_t gaussian_count = 0;
};

/// Renders `field` at every test view and compares against the dataset.
/// Fitness/RMSE against the ground-truth field are included when `tau` is
/// given; throws std::invalid_argument if the dataset has no ground truth
/// in that case.
EvaluationSummary evaluate(const GaussianField& field, const SceneDataset& dataset,
                           std::optional<double> tau = std::nullopt);

/// Between-field rendering disagreement at a set of views.
struct DisagreementReport {
    double fitness = 0.0;
    double rmse = 0.0;
    std::vector<int> view_ids;
    std::vector<double> psnr_between;
    std::vector<double> depth_abs_error_rel;

    double mean_psnr_between() const;
    double mean_depth_abs_error_rel() const;
};

/// Point and rendering disagreement between two fields. Depth error treats
/// field `a` as the reference.
DisagreementReport measure_disagreement(const GaussianField& a, const GaussianField& b,
                                        std::span<const Camera> views, const Vec3& background, double tau);

}  // namespace corgs
