#include "corgs/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace corgs {

namespace {

constexpr int kRadius = kSsimWindow / 2;

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0.0) {}
    double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
    double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

Plane channel_plane(const ImageBuffer& img, int c) {
    Plane p(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            p(x, y) = img.at(x, y, c);
        }
    }
    return p;
}

/// Valid-mode separable correlation with the SSIM window.
Plane filter_valid(const Plane& in, const std::vector<double>& taps) {
    const int ow = in.width - kSsimWindow + 1;
    const int oh = in.height - kSsimWindow + 1;
    Plane horizontal(ow, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) {
                s += taps[k] * in(x + k, y);
            }
            horizontal(x, y) = s;
        }
    }
    Plane out(ow, oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) {
                s += taps[k] * horizontal(x, y + k);
            }
            out(x, y) = s;
        }
    }
    return out;
}

/// Adjoint of filter_valid: scatters a valid-size map back to full size.
Plane filter_valid_adjoint(const Plane& g, const std::vector<double>& taps, int width, int height) {
    Plane vertical(g.width, height);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double v = g(x, y);
            for (int k = 0; k < kSsimWindow; ++k) {
                vertical(x, y + k) += taps[k] * v;
            }
        }
    }
    Plane out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double v = vertical(x, y);
            for (int k = 0; k < kSsimWindow; ++k) {
                out(x + k, y) += taps[k] * v;
            }
        }
    }
    return out;
}

Plane product(const Plane& a, const Plane& b) {
    Plane p(a.width, a.height);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        p.v[i] = a.v[i] * b.v[i];
    }
    return p;
}

void check_inputs(const ImageBuffer& a, const ImageBuffer& b) {
    a.require_same_shape(b, "ssim");
    if (a.width < kSsimWindow || a.height < kSsimWindow) {
        throw std::invalid_argument("ssim: images must be at least 11x11");
    }
}

SsimWithGradient compute(const ImageBuffer& a, const ImageBuffer& b, bool with_gradient) {
    check_inputs(a, b);
    const auto taps = ssim_window_taps();
    const int ow = a.width - kSsimWindow + 1;
    const int oh = a.height - kSsimWindow + 1;
    const double inv_count = 1.0 / (static_cast<double>(ow) * oh * a.channels);

    SsimWithGradient result;
    if (with_gradient) {
        result.grad_a = ImageBuffer(a.width, a.height, a.channels);
        result.grad_b = ImageBuffer(a.width, a.height, a.channels);
    }
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        const Plane x = channel_plane(a, c);
        const Plane y = channel_plane(b, c);
        const Plane mu_x = filter_valid(x, taps);
        const Plane mu_y = filter_valid(y, taps);
        const Plane e_xx = filter_valid(product(x, x), taps);
        const Plane e_yy = filter_valid(product(y, y), taps);
        const Plane e_xy = filter_valid(product(x, y), taps);

        Plane g_mu_x(ow, oh), g_mu_y(ow, oh), g_xx(ow, oh), g_yy(ow, oh), g_xy(ow, oh);
        for (std::size_t i = 0; i < mu_x.v.size(); ++i) {
            const double mx = mu_x.v[i];
            const double my = mu_y.v[i];
            const double n1 = 2.0 * mx * my + kSsimC1;
            const double n2 = 2.0 * (e_xy.v[i] - mx * my) + kSsimC2;
            const double d1 = mx * mx + my * my + kSsimC1;
            const double d2 = (e_xx.v[i] - mx * mx) + (e_yy.v[i] - my * my) + kSsimC2;
            const double denom = d1 * d2;
            const double s = n1 * n2 / denom;
            total += s;
            if (with_gradient) {
                g_mu_x.v[i] = inv_count * (2.0 * my * (n2 - n1) / denom - s * 2.0 * mx * (d2 - d1) / denom);
                g_mu_y.v[i] = inv_count * (2.0 * mx * (n2 - n1) / denom - s * 2.0 * my * (d2 - d1) / denom);
                g_xx.v[i] = inv_count * (-s / d2);
                g_yy.v[i] = inv_count * (-s / d2);
                g_xy.v[i] = inv_count * (2.0 * n1 / denom);
            }
        }
        if (with_gradient) {
            const Plane b_mu_x = filter_valid_adjoint(g_mu_x, taps, a.width, a.height);
            const Plane b_mu_y = filter_valid_adjoint(g_mu_y, taps, a.width, a.height);
            const Plane b_xx = filter_valid_adjoint(g_xx, taps, a.width, a.height);
            const Plane b_yy = filter_valid_adjoint(g_yy, taps, a.width, a.height);
            const Plane b_xy = filter_valid_adjoint(g_xy, taps, a.width, a.height);
            for (int py = 0; py < a.height; ++py) {
                for (int px = 0; px < a.width; ++px) {
                    const double xv = x(px, py);
                    const double yv = y(px, py);
                    result.grad_a.at(px, py, c) = b_mu_x(px, py) + 2.0 * xv * b_xx(px, py) + yv * b_xy(px, py);
                    result.grad_b.at(px, py, c) = b_mu_y(px, py) + 2.0 * yv * b_yy(px, py) + xv * b_xy(px, py);
                }
            }
        }
    }
    result.value = total / (static_cast<double>(ow) * oh * a.channels);
    return result;
}

}  // namespace

std::vector<double> ssim_window_taps() {
    std::vector<double> taps(kSsimWindow);
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kRadius;
        taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[i];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    return compute(a, b, false).value;
}

double dssim(const ImageBuffer& a, const ImageBuffer& b) {
    return 0.5 * (1.0 - ssim(a, b));
}

SsimWithGradient ssim_with_gradient(const ImageBuffer& a, const ImageBuffer& b) {
    return compute(a, b, true);
}

}  // namespace corgs
