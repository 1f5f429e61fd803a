#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>

namespace corgs::test {

/// 32-bit LCG shared with tests/data/make_ssim_reference.py.
inline ImageBuffer lcg_image(std::uint32_t seed, int width, int height, int channels) {
    ImageBuffer img(width, height, channels);
    std::uint32_t x = seed;
    for (double& v : img.pixels) {
        x = 1664525u * x + 1013904223u;
        v = static_cast<double>(x >> 8) / static_cast<double>(1u << 24);
    }
    return img;
}

inline ImageBuffer random_image(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    ImageBuffer img(w, h, c);
    for (double& v : img.pixels) {
        v = u(rng);
    }
    return img;
}

/// Random field with stored (pre-activation) parameters around the origin.
inline GaussianField random_field(std::mt19937_64& rng, std::size_t n, double extent = 0.6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    GaussianField f;
    f.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.positions[i] = Vec3(u(rng), u(rng), u(rng)) * extent;
        f.log_scales[i] = Vec3(std::log(0.08) + 0.5 * u(rng), std::log(0.08) + 0.5 * u(rng),
                               std::log(0.08) + 0.5 * u(rng));
        Vec4 q(g(rng), g(rng), g(rng), g(rng));
        f.rotations[i] = q.normalized();
        f.opacities[i] = 1.0 + 1.5 * u(rng);
        f.colors[i] = Vec3(u(rng), u(rng), u(rng)) * 2.0;
    }
    return f;
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double extent = 1.0) {
    std::uniform_real_distribution<double> u(-extent, extent);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
        p = Vec3(u(rng), u(rng), u(rng));
    }
    return pts;
}

inline GaussianField field_from_points(std::span<const Vec3> points) {
    GaussianField f;
    for (const auto& p : points) {
        f.push_back(p, Vec3::Constant(0.1), Eigen::Quaterniond::Identity(), 0.5, Vec3::Constant(0.5));
    }
    return f;
}

/// Camera on the -z axis looking at the origin.
inline Camera front_camera(int width, int height, double distance = 3.0, double fov_degrees = 45.0) {
    return Camera::look_at(Vec3(0.0, 0.0, -distance), Vec3::Zero(), Vec3::UnitY(),
                           intrinsics_from_fov(width, height, fov_degrees * std::numbers::pi / 180.0));
}

/// Brute-force nearest neighbor keeping the first minimum.
inline std::pair<std::int64_t, double> brute_nearest(std::span<const Vec3> points, const Vec3& q) {
    std::int64_t best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = (points[i] - q).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::int64_t>(i);
        }
    }
    return {best, best_d};
}

/// Central difference of `f` with respect to the scalar `x`, which is
/// restored afterwards.
inline double central_difference(double& x, double h, const std::function<double()>& f) {
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Straightforward SSIM: explicit 2-D Gaussian window, every valid window
/// position evaluated independently, population statistics.
inline double naive_ssim(const ImageBuffer& a, const ImageBuffer& b) {
    constexpr int r = 5;
    double w[11][11];
    double total = 0.0;
    for (int y = -r; y <= r; ++y) {
        for (int x = -r; x <= r; ++x) {
            w[y + r][x + r] = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
            total += w[y + r][x + r];
        }
    }
    for (auto& row : w) {
        for (double& v : row) {
            v /= total;
        }
    }
    const double c1 = 1e-4, c2 = 9e-4;
    double sum = 0.0;
    int count = 0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y = r; y < a.height - r; ++y) {
            for (int x = r; x < a.width - r; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const double k = w[dy + r][dx + r];
                        const double va = a.at(x + dx, y + dy, c), vb = b.at(x + dx, y + dy, c);
                        ma += k * va;
                        mb += k * vb;
                        saa += k * va * va;
                        sbb += k * vb * vb;
                        sab += k * va * vb;
                    }
                }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        }
    }
    return sum / count;
}

}  // namespace corgs::test
