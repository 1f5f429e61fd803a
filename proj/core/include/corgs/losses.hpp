#pragma once

#include "corgs/image.hpp"

namespace corgs {

/// Scalar loss with gradients for both of its image arguments.
struct ImagePairLoss {
    double value = 0.0;
    double l1 = 0.0;
    double dssim = 0.0;
    ImageBuffer grad_a;
    ImageBuffer grad_b;
};

/// Mean absolute difference over all pixel channels. The subgradient at
/// a == b is 0.
ImagePairLoss l1_loss(const ImageBuffer& a, const ImageBuffer& b);

/// (1 - lambda) * L1(a, b) + lambda * D-SSIM(a, b), D-SSIM = (1 - SSIM) / 2.
/// Used both for the ground-truth training loss and, between two renders,
/// for pseudo-view co-regularization. Throws std::invalid_argument on shape
/// mismatch or lambda outside [0,1].
ImagePairLoss photometric_loss(const ImageBuffer& a, const ImageBuffer& b, double lambda_dssim);

}  // namespace corgs
