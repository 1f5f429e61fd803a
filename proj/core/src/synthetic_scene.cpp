#include "corgs/metrics.hpp"
#include "corgs/rasterizer.hpp"
#include "corgs/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace corgs {

void SceneDataset::validate() const {
    if (train_cameras.size() != train_images.size() || test_cameras.size() != test_images.size()) {
        throw std::invalid_argument("SceneDataset: camera and image counts differ");
    }
    if ((!train_depths.empty() && train_depths.size() != train_cameras.size()) ||
        (!test_depths.empty() && test_depths.size() != test_cameras.size())) {
        throw std::invalid_argument("SceneDataset: depth and camera counts differ");
    }
    auto check = [](const std::vector<Camera>& cams, const std::vector<ImageBuffer>& images,
                    const std::vector<ImageBuffer>& depths) {
        for (std::size_t i = 0; i < cams.size(); ++i) {
            cams[i].validate();
            if (images[i].width != cams[i].width() || images[i].height != cams[i].height() || images[i].channels != 3) {
                throw std::invalid_argument("SceneDataset: image " + std::to_string(i) + " does not match its camera");
            }
            if (!depths.empty() && (depths[i].width != cams[i].width() || depths[i].height != cams[i].height() ||
                                    depths[i].channels != 1)) {
                throw std::invalid_argument("SceneDataset: depth " + std::to_string(i) + " does not match its camera");
            }
        }
    };
    check(train_cameras, train_images, train_depths);
    check(test_cameras, test_images, test_depths);
}

double SceneDataset::camera_extent() const {
    if (train_cameras.empty()) {
        return 1.0;
    }
    Vec3 mean = Vec3::Zero();
    for (const auto& c : train_cameras) {
        mean += c.center();
    }
    mean /= static_cast<double>(train_cameras.size());
    double radius = 0.0;
    for (const auto& c : train_cameras) {
        radius = std::max(radius, (c.center() - mean).norm());
    }
    return radius > 0.0 ? 1.1 * radius : 1.0;
}

namespace {

Camera ring_camera(double azimuth_deg, double elevation_deg, double radius, const Intrinsics& k) {
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    // World y is up; cameras orbit around it.
    const Vec3 eye(radius * std::cos(el) * std::sin(az), radius * std::sin(el), -radius * std::cos(el) * std::cos(az));
    return Camera::look_at(eye, Vec3::Zero(), Vec3::UnitY(), k);
}

ImageBuffer masked_depth(const RenderOutput& out) {
    ImageBuffer depth = out.depth;
    for (std::size_t i = 0; i < depth.pixels.size(); ++i) {
        if (out.accum_alpha.pixels[i] < kDepthValidAlpha) {
            depth.pixels[i] = 0.0;
        }
    }
    return depth;
}

}  // namespace

SceneDataset generate_synthetic_scene(const SyntheticSceneOptions& o) {
    if (o.n_train < 2) {
        throw std::invalid_argument("generate_synthetic_scene: at least two training views required");
    }
    if (o.n_gaussians < 1) {
        throw std::invalid_argument("generate_synthetic_scene: at least one gaussian required");
    }
    if (o.n_test < 0 || o.width < 1 || o.height < 1) {
        throw std::invalid_argument("generate_synthetic_scene: invalid view count or resolution");
    }

    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SceneDataset data;
    data.bounds = SceneBounds{};
    data.background = o.background;

    GaussianField gt;
    for (int i = 0; i < o.n_gaussians; ++i) {
        const Vec3 position(uniform(-0.8, 0.8), uniform(-0.8, 0.8), uniform(-0.8, 0.8));
        const Vec3 scale(std::exp(uniform(std::log(0.04), std::log(0.25))),
                         std::exp(uniform(std::log(0.04), std::log(0.25))),
                         std::exp(uniform(std::log(0.04), std::log(0.25))));
        Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
        if (q.squaredNorm() < 1e-12) {
            q = Eigen::Quaterniond::Identity();
        }
        const double opacity = uniform(0.6, 0.95);
        const Vec3 color(uniform(0.1, 0.9), uniform(0.1, 0.9), uniform(0.1, 0.9));
        gt.push_back(position, scale, q.normalized(), opacity, color);
    }

    const Intrinsics k = intrinsics_from_fov(o.width, o.height, o.fov_degrees * std::numbers::pi / 180.0);
    const double arc = o.train_arc_degrees;
    for (int i = 0; i < o.n_train; ++i) {
        const double az = -0.5 * arc + arc * i / (o.n_train - 1);
        data.train_cameras.push_back(ring_camera(az, o.train_elevation_degrees, o.camera_radius, k));
    }
    for (int j = 0; j < o.n_test; ++j) {
        const double az = -0.5 * arc + arc * (j + 0.5) / std::max(1, o.n_test);
        const double el = o.train_elevation_degrees + (j % 2 == 0 ? -1.0 : 1.0) * o.test_elevation_spread_degrees;
        data.test_cameras.push_back(ring_camera(az, el, o.camera_radius, k));
    }

    for (const auto& cam : data.train_cameras) {
        const RenderOutput out = render(gt, cam, o.background);
        data.train_images.push_back(out.color);
        data.train_depths.push_back(masked_depth(out));
    }
    for (const auto& cam : data.test_cameras) {
        const RenderOutput out = render(gt, cam, o.background);
        data.test_images.push_back(out.color);
        data.test_depths.push_back(masked_depth(out));
    }
    data.ground_truth_field = std::move(gt);
    return data;
}

SceneDataset generate_synthetic_scene(std::uint64_t seed, int n_gaussians, int n_train, int n_test, int width,
                                      int height) {
    SyntheticSceneOptions o;
    o.seed = seed;
    o.n_gaussians = n_gaussians;
    o.n_train = n_train;
    o.n_test = n_test;
    o.width = width;
    o.height = height;
    return generate_synthetic_scene(o);
}

}  // namespace corgs
