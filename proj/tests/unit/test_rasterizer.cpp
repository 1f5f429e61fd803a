#include "support.hpp"

#include "corgs/errors.hpp"
#include "corgs/parallel.hpp"
#include "corgs/rasterizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace corgs {
namespace {

Camera axis_camera(int w, int h, double f) {
    Camera cam;
    cam.intrinsics = Intrinsics{f, f, w / 2.0, h / 2.0, w, h};
    return cam;
}

struct ThreadGuard {
    int saved = num_threads();
    ~ThreadGuard() { set_num_threads(saved); }
};

TEST(Projection, OpticalAxisMapsToPrincipalPoint) {
    GaussianField f;
    f.push_back(Vec3(0, 0, 5), Vec3::Constant(0.1), Eigen::Quaterniond::Identity(), 0.9, Vec3::Ones());
    const auto p = project_gaussian(f, 0, axis_camera(40, 30, 50.0));
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->mean2d.x(), 20.0, 1e-12);
    EXPECT_NEAR(p->mean2d.y(), 15.0, 1e-12);
    EXPECT_NEAR(p->depth, 5.0, 1e-12);
}

TEST(Projection, IsotropicCovarianceAtImageCenter) {
    const double sigma = 0.2, z = 4.0, f = 60.0;
    GaussianField field;
    field.push_back(Vec3(0, 0, z), Vec3::Constant(sigma), Eigen::Quaterniond::Identity(), 0.9, Vec3::Ones());
    const auto p = project_gaussian(field, 0, axis_camera(64, 64, f));
    ASSERT_TRUE(p.has_value());
    const double expected = std::pow(f * sigma / z, 2) + kLowPassFilter;
    EXPECT_NEAR(p->cov2d[0], expected, 1e-10);
    EXPECT_NEAR(p->cov2d[1], 0.0, 1e-12);
    EXPECT_NEAR(p->cov2d[2], expected, 1e-10);
}

TEST(Projection, BehindCameraIsCulled) {
    GaussianField f;
    f.push_back(Vec3(0, 0, -1), Vec3::Constant(0.1), Eigen::Quaterniond::Identity(), 0.9, Vec3::Ones());
    EXPECT_FALSE(project_gaussian(f, 0, axis_camera(32, 32, 30.0)).has_value());
    f.positions[0].z() = 0.005;
    EXPECT_FALSE(project_gaussian(f, 0, axis_camera(32, 32, 30.0)).has_value());
}

TEST(Projection, OffscreenAndTransparentAreCulled) {
    GaussianField f;
    f.push_back(Vec3(50, 0, 2), Vec3::Constant(0.01), Eigen::Quaterniond::Identity(), 0.9, Vec3::Ones());
    f.push_back(Vec3(0, 0, 2), Vec3::Constant(0.1), Eigen::Quaterniond::Identity(), 0.5 / 255.0, Vec3::Ones());
    EXPECT_FALSE(project_gaussian(f, 0, axis_camera(32, 32, 30.0)).has_value());
    EXPECT_FALSE(project_gaussian(f, 1, axis_camera(32, 32, 30.0)).has_value());
}

TEST(Render, EmptyFieldShowsBackground) {
    const RenderOutput out = render(GaussianField{}, test::front_camera(16, 12), Vec3::Zero());
    for (double v : out.color.pixels) EXPECT_EQ(v, 0.0);
    for (double v : out.accum_alpha.pixels) EXPECT_EQ(v, 0.0);
    for (double v : out.transmittance.pixels) EXPECT_EQ(v, 1.0);
    const RenderOutput gray = render(GaussianField{}, test::front_camera(4, 4), Vec3(0.2, 0.4, 0.6));
    EXPECT_EQ(gray.color.at(1, 2, 1), 0.4);
}

TEST(Render, SingleOpaqueGaussianHandComputed) {
    GaussianField f;
    const double z = 3.0;
    f.push_back(Vec3(0, 0, z), Vec3::Constant(100.0), Eigen::Quaterniond::Identity(), 0.999, Vec3(1, 0, 0));
    const RenderOutput out = render(f, axis_camera(33, 33, 40.0), Vec3::Zero());
    // Pixel 16 has its center exactly on the principal point.
    EXPECT_NEAR(out.color.at(16, 16, 0), 0.999, 1e-9);
    EXPECT_NEAR(out.color.at(16, 16, 1), 0.0, 1e-11);
    EXPECT_NEAR(out.accum_alpha.at(16, 16), 0.999, 1e-9);
    EXPECT_NEAR(out.depth.at(16, 16), z, 1e-9);
}

TEST(Render, FrontGaussianAnnihilatesBackOne) {
    GaussianField f;
    f.push_back(Vec3(0, 0, 6), Vec3::Constant(5.0), Eigen::Quaterniond::Identity(), 0.9, Vec3(0, 0, 1));
    f.push_back(Vec3(0, 0, 2), Vec3::Constant(5.0), Eigen::Quaterniond::Identity(), 1.0 - 1e-9, Vec3(0, 1, 0));
    const RenderOutput out = render(f, axis_camera(33, 33, 40.0), Vec3::Zero());
    EXPECT_NEAR(out.color.at(16, 16, 1), 1.0, 1e-6);
    EXPECT_NEAR(out.color.at(16, 16, 2), 0.0, 1e-6);
    EXPECT_NEAR(out.depth.at(16, 16), 2.0, 1e-6);
}

TEST(Render, NonFiniteParameterNamesPrimitive) {
    std::mt19937_64 rng(4);
    GaussianField f = test::random_field(rng, 6);
    f.log_scales[4].y() = NAN;
    try {
        render(f, test::front_camera(16, 16), Vec3::Zero());
        FAIL() << "expected RenderError";
    } catch (const RenderError& e) {
        EXPECT_EQ(e.primitive(), 4u);
        EXPECT_NE(std::string(e.what()).find('4'), std::string::npos);
    }
}

// Composites every projected primitive at every pixel with no footprint
// culling and compares to the renderer.
TEST(Render, MatchesNaiveCompositingOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const GaussianField f = test::random_field(rng, 30);
        const Camera cam = test::front_camera(24, 20);
        const Vec3 bg(0.1, 0.2, 0.3);
        const RenderOutput out = render(f, cam, bg);

        std::vector<Projected2DGaussian> proj;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (auto p = project_gaussian(f, i, cam)) proj.push_back(*p);
        }
        std::stable_sort(proj.begin(), proj.end(), [](const auto& a, const auto& b) { return a.depth < b.depth; });
        for (int y = 0; y < cam.height(); ++y) {
            for (int x = 0; x < cam.width(); ++x) {
                double T = 1.0, D = 0.0;
                Vec3 C = Vec3::Zero();
                for (const auto& p : proj) {
                    const double dx = x + 0.5 - p.mean2d.x(), dy = y + 0.5 - p.mean2d.y();
                    const double power =
                        -0.5 * (p.conic[0] * dx * dx + p.conic[2] * dy * dy) - p.conic[1] * dx * dy;
                    if (power > 0.0) continue;
                    const double alpha = p.opacity * std::exp(power);
                    if (alpha < kMinAlpha) continue;
                    C += T * alpha * p.color;
                    D += T * alpha * p.depth;
                    T *= 1.0 - alpha;
                    if (T < kTransmittanceCutoff) break;
                }
                for (int c = 0; c < 3; ++c) {
                    EXPECT_NEAR(out.color.at(x, y, c), C[c] + T * bg[c], 1e-12);
                }
                EXPECT_NEAR(out.accum_alpha.at(x, y), 1.0 - T, 1e-12);
                EXPECT_NEAR(out.transmittance.at(x, y), T, 1e-12);
                EXPECT_NEAR(out.depth.at(x, y), D / std::max(1.0 - T, kDepthEpsilon), 1e-9);
            }
        }
    }
}

TEST(Render, OutputsStayInRange) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const GaussianField f = test::random_field(rng, 40);
        const Vec3 bg(0.3, 0.6, 0.9);
        const RenderOutput out = render(f, test::front_camera(20, 20), bg);
        for (std::size_t p = 0; p < out.accum_alpha.pixels.size(); ++p) {
            const double a = out.accum_alpha.pixels[p];
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
            for (int c = 0; c < 3; ++c) {
                const double v = out.color.pixels[3 * p + c];
                EXPECT_GE(v, -1e-12);
                EXPECT_LE(v, 1.0 + 1e-12);
            }
        }
    }
}

TEST(Render, BitIdenticalAcrossThreadCounts) {
    ThreadGuard guard;
    std::mt19937_64 rng(13);
    const GaussianField f = test::random_field(rng, 60);
    const Camera cam = test::front_camera(37, 29);
    set_num_threads(1);
    const RenderOutput a = render(f, cam, Vec3::Zero());
    ImageBuffer g = test::random_image(rng, 37, 29, 3, -1.0, 1.0);
    const RenderGradients ga = render_backward(f, cam, a, g);
    set_num_threads(4);
    const RenderOutput b = render(f, cam, Vec3::Zero());
    const RenderGradients gb = render_backward(f, cam, b, g);
    EXPECT_EQ(a.color, b.color);
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(a.accum_alpha, b.accum_alpha);
    EXPECT_TRUE(ga.params == gb.params);
    EXPECT_EQ(ga.mean2d, gb.mean2d);
}

TEST(Backward, ZeroUpstreamGradientGivesZero) {
    std::mt19937_64 rng(1);
    const GaussianField f = test::random_field(rng, 20);
    const Camera cam = test::front_camera(16, 16);
    const RenderOutput out = render(f, cam, Vec3::Zero());
    const ImageBuffer zc(16, 16, 3), zd(16, 16, 1);
    const RenderGradients g = render_backward(f, cam, out, zc, &zd);
    for (const auto& block : g.params.blocks()) {
        for (double v : block) EXPECT_EQ(v, 0.0);
    }
}

TEST(Backward, RejectsShapeMismatch) {
    std::mt19937_64 rng(1);
    const GaussianField f = test::random_field(rng, 3);
    const Camera cam = test::front_camera(8, 8);
    const RenderOutput out = render(f, cam, Vec3::Zero());
    EXPECT_THROW(render_backward(f, cam, out, ImageBuffer(7, 8, 3)), std::invalid_argument);
    EXPECT_THROW(render_backward(test::random_field(rng, 4), cam, out, ImageBuffer(8, 8, 3)), std::invalid_argument);
}

double weighted_sum(const RenderOutput& out, const ImageBuffer& gc, const ImageBuffer* gd) {
    double s = 0.0;
    for (std::size_t i = 0; i < gc.pixels.size(); ++i) s += gc.pixels[i] * out.color.pixels[i];
    if (gd) {
        for (std::size_t i = 0; i < gd->pixels.size(); ++i) s += gd->pixels[i] * out.depth.pixels[i];
    }
    return s;
}

void check_fd(GaussianField f, const Camera& cam, const ImageBuffer& gc, const ImageBuffer* gd,
              const std::vector<std::size_t>& entries, double h) {
    const Vec3 bg(0.2, 0.1, 0.3);
    const RenderOutput out = render(f, cam, bg);
    const RenderGradients g = render_backward(f, cam, out, gc, gd);
    auto fb = f.blocks();
    const auto gb = g.params.blocks();
    for (std::size_t e : entries) {
        std::size_t b = 0, off = e;
        while (off >= fb[b].size()) off -= fb[b++].size();
        const double numeric =
            test::central_difference(fb[b][off], h, [&] { return weighted_sum(render(f, cam, bg), gc, gd); });
        EXPECT_LT(test::relative_error(gb[b][off], numeric), 1e-4)
            << "block " << b << " entry " << off << " analytic " << gb[b][off] << " numeric " << numeric;
    }
}

TEST(Backward, SingleGaussianSumOfColorMatchesFiniteDifferences) {
    GaussianField f;
    f.push_back(Vec3(0.1, -0.05, 0.2), Vec3(0.3, 0.2, 0.25),
                Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Vec3(1, 1, 0).normalized())), 0.7, Vec3(0.8, 0.3, 0.5));
    const Camera cam = test::front_camera(24, 24);
    const ImageBuffer ones(24, 24, 3, 1.0);
    std::vector<std::size_t> all(kParamsPerPrimitive);
    std::iota(all.begin(), all.end(), 0);
    check_fd(f, cam, ones, nullptr, all, 1e-4);
}

TEST(Backward, RandomSceneRandomUpstreamMatchesFiniteDifferences) {
    std::mt19937_64 rng(99);
    const GaussianField f = test::random_field(rng, 20);
    const Camera cam = test::front_camera(24, 24);
    const ImageBuffer gc = test::random_image(rng, 24, 24, 3, -1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, 20 * kParamsPerPrimitive - 1);
    std::vector<std::size_t> entries(50);
    for (auto& e : entries) e = pick(rng);
    check_fd(f, cam, gc, nullptr, entries, 1e-4);
}

TEST(Backward, DepthUpstreamMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    const GaussianField f = test::random_field(rng, 12);
    const Camera cam = test::front_camera(20, 20);
    const ImageBuffer gc = test::random_image(rng, 20, 20, 3, -1.0, 1.0);
    const ImageBuffer gd = test::random_image(rng, 20, 20, 1, -0.1, 0.1);
    std::uniform_int_distribution<std::size_t> pick(0, 12 * kParamsPerPrimitive - 1);
    std::vector<std::size_t> entries(40);
    for (auto& e : entries) e = pick(rng);
    check_fd(f, cam, gc, &gd, entries, 1e-5);
}

TEST(Backward, VisibilityAndNdcMeanGradient) {
    GaussianField f;
    f.push_back(Vec3(0, 0, 0), Vec3::Constant(0.2), Eigen::Quaterniond::Identity(), 0.8, Vec3(1, 1, 1));
    f.push_back(Vec3(0, 0, -10), Vec3::Constant(0.2), Eigen::Quaterniond::Identity(), 0.8, Vec3(1, 1, 1));
    const Camera cam = test::front_camera(16, 16);
    const RenderOutput out = render(f, cam, Vec3::Zero());
    ImageBuffer gc(16, 16, 3);
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 16; ++y) gc.at(x, y, 0) = 1.0;
    const RenderGradients g = render_backward(f, cam, out, gc);
    EXPECT_TRUE(g.visible[0]);
    EXPECT_FALSE(g.visible[1]);
    EXPECT_GT(g.mean2d[0].norm(), 0.0);
    EXPECT_EQ(g.mean2d[1].norm(), 0.0);
}

}  // namespace
}  // namespace corgs
