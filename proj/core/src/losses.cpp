#include "corgs/losses.hpp"

#include "corgs/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace corgs {

ImagePairLoss l1_loss(const ImageBuffer& a, const ImageBuffer& b) {
    a.require_same_shape(b, "l1_loss");
    ImagePairLoss loss;
    loss.grad_a = ImageBuffer(a.width, a.height, a.channels);
    loss.grad_b = ImageBuffer(a.width, a.height, a.channels);
    if (a.pixels.empty()) {
        return loss;
    }
    const double inv_n = 1.0 / static_cast<double>(a.pixels.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += std::abs(d);
        const double g = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
        loss.grad_a.pixels[i] = g;
        loss.grad_b.pixels[i] = -g;
    }
    loss.value = sum * inv_n;
    loss.l1 = loss.value;
    return loss;
}

ImagePairLoss photometric_loss(const ImageBuffer& a, const ImageBuffer& b, double lambda_dssim) {
    a.require_same_shape(b, "photometric_loss");
    if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0)) {
        throw std::invalid_argument("photometric_loss: lambda must lie in [0, 1]");
    }
    if (a.pixels == b.pixels) {
        ImagePairLoss zero;
        zero.grad_a = ImageBuffer(a.width, a.height, a.channels);
        zero.grad_b = ImageBuffer(a.width, a.height, a.channels);
        return zero;
    }
    ImagePairLoss loss = l1_loss(a, b);
    const double w_l1 = 1.0 - lambda_dssim;
    for (auto& v : loss.grad_a.pixels) {
        v *= w_l1;
    }
    for (auto& v : loss.grad_b.pixels) {
        v *= w_l1;
    }
    loss.value = w_l1 * loss.l1;
    if (lambda_dssim > 0.0) {
        const SsimWithGradient s = ssim_with_gradient(a, b);
        loss.dssim = 0.5 * (1.0 - s.value);
        loss.value += lambda_dssim * loss.dssim;
        // d(dssim)/dx = -0.5 d(ssim)/dx
        const double w = -0.5 * lambda_dssim;
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            loss.grad_a.pixels[i] += w * s.grad_a.pixels[i];
            loss.grad_b.pixels[i] += w * s.grad_b.pixels[i];
        }
    }
    return loss;
}

}  // namespace corgs
