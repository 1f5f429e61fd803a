#include "support.hpp"

#include "corgs/errors.hpp"
#include "corgs/field_io.hpp"
#include "corgs/metrics.hpp"
#include "corgs/rasterizer.hpp"
#include "corgs/scene.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace corgs {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("corgs_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(Covariance, UnitScaleIdentityRotation) {
    const Mat3 s = covariance_from_scale_rotation(Vec3(1, 1, 1), Eigen::Quaterniond::Identity());
    EXPECT_TRUE(s.isApprox(Mat3::Identity(), 1e-15));
}

TEST(Covariance, AxisScaleIdentityRotation) {
    const Mat3 s = covariance_from_scale_rotation(Vec3(2, 1, 1), Eigen::Quaterniond::Identity());
    EXPECT_TRUE(s.isApprox(Vec3(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-15));
}

TEST(Covariance, QuarterTurnAboutZPermutesAxes) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
    const Mat3 s = covariance_from_scale_rotation(Vec3(2, 1, 1), q);
    EXPECT_NEAR((s - Vec3(1, 4, 1).asDiagonal().toDenseMatrix()).norm(), 0.0, 1e-12);
}

TEST(Covariance, RejectsOutOfContractInput) {
    EXPECT_THROW(covariance_from_scale_rotation(Vec3(0, 1, 1), Eigen::Quaterniond::Identity()), std::invalid_argument);
    EXPECT_THROW(covariance_from_scale_rotation(Vec3(-1, 1, 1), Eigen::Quaterniond::Identity()),
                 std::invalid_argument);
    EXPECT_THROW(covariance_from_scale_rotation(Vec3(NAN, 1, 1), Eigen::Quaterniond::Identity()),
                 std::invalid_argument);
    EXPECT_THROW(covariance_from_scale_rotation(Vec3(1, 1, 1), Eigen::Quaterniond(0, 0, 0, 0)), std::invalid_argument);
}

TEST(Covariance, SymmetricPositiveDefiniteForRandomInput) {
    std::mt19937_64 rng(3);
    const GaussianField f = test::random_field(rng, 50);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Mat3 s = f.covariance(i);
        EXPECT_NEAR((s - s.transpose()).norm(), 0.0, 1e-15);
        Eigen::SelfAdjointEigenSolver<Mat3> eig(s);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
        // Eigenvalues are the squared scales.
        std::array<double, 3> expected{f.scale(i).x(), f.scale(i).y(), f.scale(i).z()};
        for (double& e : expected) {
            e *= e;
        }
        std::sort(expected.begin(), expected.end());
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(eig.eigenvalues()[k], expected[k], 1e-12);
        }
    }
}

TEST(GaussianField, ActivationsAndValidation) {
    GaussianField f;
    f.push_back(Vec3(1, 2, 3), Vec3(0.5, 0.25, 2.0), Eigen::Quaterniond::Identity(), 0.3, Vec3(0.2, 0.4, 0.9));
    EXPECT_NEAR(f.opacity(0), 0.3, 1e-12);
    EXPECT_TRUE(f.scale(0).isApprox(Vec3(0.5, 0.25, 2.0), 1e-12));
    EXPECT_TRUE(f.color(0).isApprox(Vec3(0.2, 0.4, 0.9), 1e-12));
    EXPECT_NO_THROW(f.validate());
    f.positions[0].x() = INFINITY;
    EXPECT_THROW(f.validate(), std::invalid_argument);
    f.positions[0].x() = 0.0;
    f.colors.pop_back();
    EXPECT_THROW(f.validate(), std::invalid_argument);
}

TEST(GaussianField, KeepRowsPreservesOrder) {
    std::mt19937_64 rng(1);
    GaussianField f = test::random_field(rng, 5);
    const GaussianField orig = f;
    f.keep_rows({true, false, true, false, true});
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f.positions[1], orig.positions[2]);
    EXPECT_EQ(f.colors[2], orig.colors[4]);
}

TEST(FieldIo, RoundTripIsExact) {
    std::mt19937_64 rng(11);
    const GaussianField f = test::random_field(rng, 37);
    std::stringstream buf;
    save_field(f, buf);
    const GaussianField g = load_field(buf);
    EXPECT_TRUE(static_cast<const ParameterArrays&>(f) == static_cast<const ParameterArrays&>(g));
}

TEST(FieldIo, RoundTripThroughFile) {
    std::mt19937_64 rng(12);
    const GaussianField f = test::random_field(rng, 4);
    const fs::path path = scratch_dir("fieldio") / "f.bin";
    save_field(f, path);
    EXPECT_TRUE(static_cast<const ParameterArrays&>(load_field(path)) == static_cast<const ParameterArrays&>(f));
}

TEST(FieldIo, EmptyField) {
    std::stringstream buf;
    save_field(GaussianField{}, buf);
    EXPECT_EQ(load_field(buf).size(), 0u);
}

TEST(FieldIo, DeclaredCountLargerThanPayloadIsTruncation) {
    std::mt19937_64 rng(5);
    std::stringstream ten, nine;
    save_field(test::random_field(rng, 10), ten);
    save_field(test::random_field(rng, 9), nine);
    const std::string t = ten.str(), n = nine.str();
    const std::string bad = t.substr(0, t.find('\n') + 1) + n.substr(n.find('\n') + 1);
    std::stringstream in(bad);
    try {
        load_field(in);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("truncat"), std::string::npos) << e.what();
        EXPECT_GT(e.offset(), 0u);
    }
}

TEST(FieldIo, RejectsBadHeaders) {
    auto load_str = [](const std::string& s) {
        std::stringstream in(s);
        return load_field(in);
    };
    EXPECT_THROW(load_str(""), FormatError);
    EXPECT_THROW(load_str("not json\n"), FormatError);
    EXPECT_THROW(load_str("[1,2]\n"), FormatError);
    EXPECT_THROW(load_str(R"({"format":"corgs-field","version":99,"count":0,"arrays":[]})" "\n"), FormatError);
    std::stringstream good;
    save_field(GaussianField{}, good);
    EXPECT_THROW(load_str(good.str() + "x"), FormatError);
}

TEST(FieldIo, ReadsFloat32Arrays) {
    const int n = 2;
    std::string header = R"({"format":"corgs-field","version":1,"count":2,"arrays":[)"
                         R"({"name":"positions","dtype":"<f4","shape":[2,3]},)"
                         R"({"name":"log_scales","dtype":"<f4","shape":[2,3]},)"
                         R"({"name":"rotations","dtype":"<f4","shape":[2,4]},)"
                         R"({"name":"opacities","dtype":"<f4","shape":[2]},)"
                         R"({"name":"colors","dtype":"<f4","shape":[2,3]}]})"
                         "\n";
    std::string payload;
    auto put = [&](float v) { payload.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (int i = 0; i < n * 3; ++i) put(0.5f * i);
    for (int i = 0; i < n * 3; ++i) put(-1.0f);
    for (int i = 0; i < n; ++i) {
        put(1.0f), put(0.0f), put(0.0f), put(0.0f);
    }
    for (int i = 0; i < n; ++i) put(0.25f);
    for (int i = 0; i < n * 3; ++i) put(0.0f);
    std::stringstream in(header + payload);
    const GaussianField f = load_field(in);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f.positions[1], Vec3(1.5, 2.0, 2.5));
    EXPECT_EQ(f.opacities[0], 0.25);
}

TEST(RawImage, RoundTripAndTruncation) {
    std::mt19937_64 rng(2);
    const ImageBuffer img = test::random_image(rng, 7, 5, 3);
    const fs::path dir = scratch_dir("rawimage");
    write_raw_image(dir / "a.raw", img);
    EXPECT_EQ(read_raw_image(dir / "a.raw"), img);
    std::ifstream in(dir / "a.raw", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream(dir / "b.raw", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    EXPECT_THROW(read_raw_image(dir / "b.raw"), FormatError);
}

TEST(Camera, LookAtPutsTargetOnOpticalAxis) {
    const Camera cam = Camera::look_at(Vec3(1, 2, -4), Vec3(0.5, 0, 0), Vec3::UnitY(), intrinsics_from_fov(32, 32, 1.0));
    const Vec3 p = cam.to_camera(Vec3(0.5, 0, 0));
    EXPECT_NEAR(p.x(), 0.0, 1e-12);
    EXPECT_NEAR(p.y(), 0.0, 1e-12);
    EXPECT_GT(p.z(), 0.0);
    EXPECT_TRUE(cam.center().isApprox(Vec3(1, 2, -4), 1e-12));
    // World up maps to image up, which is -y in camera coordinates.
    EXPECT_LT(cam.to_camera(Vec3(0.5, 1, 0)).y(), 0.0);
}

TEST(Camera, FromCenterInvertsCenter) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()));
    const Camera cam = Camera::from_center(Vec3(3, -1, 2), q, intrinsics_from_fov(10, 10, 1.0));
    EXPECT_TRUE(cam.center().isApprox(Vec3(3, -1, 2), 1e-12));
}

TEST(Camera, ValidateRejectsBadIntrinsics) {
    Camera cam = test::front_camera(16, 16);
    EXPECT_NO_THROW(cam.validate());
    cam.intrinsics.fx = 0.0;
    EXPECT_THROW(cam.validate(), std::invalid_argument);
    cam = test::front_camera(16, 16);
    cam.intrinsics.width = 0;
    EXPECT_THROW(cam.validate(), std::invalid_argument);
}

TEST(Camera, SlerpTakesShortArc) {
    const Eigen::Quaterniond a = Eigen::Quaterniond::Identity();
    const Eigen::Quaterniond b(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()));
    Eigen::Quaterniond neg_b = b;
    neg_b.coeffs() *= -1.0;
    const Eigen::Quaterniond h1 = slerp_shortest(a, b, 0.5);
    const Eigen::Quaterniond h2 = slerp_shortest(a, neg_b, 0.5);
    EXPECT_NEAR(h1.angularDistance(Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 4, Vec3::UnitY()))), 0.0,
                1e-12);
    EXPECT_NEAR(h1.angularDistance(h2), 0.0, 1e-12);
}

TEST(SyntheticScene, ConstructionContract) {
    const SceneDataset d = generate_synthetic_scene(7, 50, 3, 4, 64, 64);
    ASSERT_EQ(d.train_images.size(), 3u);
    ASSERT_EQ(d.test_images.size(), 4u);
    ASSERT_TRUE(d.ground_truth_field.has_value());
    EXPECT_EQ(d.ground_truth_field->size(), 50u);
    for (const auto& img : d.train_images) {
        EXPECT_TRUE(img.all_finite());
        EXPECT_EQ(img.width, 64);
    }
    for (const auto& img : d.test_images) {
        EXPECT_TRUE(img.all_finite());
    }
    EXPECT_NO_THROW(d.validate());
}

TEST(SyntheticScene, DeterministicForSeed) {
    const SceneDataset a = generate_synthetic_scene(7, 20, 3, 2, 24, 24);
    const SceneDataset b = generate_synthetic_scene(7, 20, 3, 2, 24, 24);
    EXPECT_EQ(a.train_images, b.train_images);
    EXPECT_EQ(a.test_images, b.test_images);
    EXPECT_EQ(a.test_depths, b.test_depths);
    EXPECT_TRUE(static_cast<const ParameterArrays&>(*a.ground_truth_field) ==
                static_cast<const ParameterArrays&>(*b.ground_truth_field));
    const SceneDataset c = generate_synthetic_scene(8, 20, 3, 2, 24, 24);
    EXPECT_FALSE(a.train_images == c.train_images);
}

TEST(SyntheticScene, GroundTruthRerenderHitsPsnrCap) {
    const SceneDataset d = generate_synthetic_scene(7, 50, 3, 4, 64, 64);
    for (std::size_t v = 0; v < d.test_cameras.size(); ++v) {
        const RenderOutput r = render(*d.ground_truth_field, d.test_cameras[v], d.background);
        EXPECT_EQ(psnr(r.color, d.test_images[v]), kPsnrCap);
    }
}

TEST(SyntheticScene, RejectsTooFewViewsOrGaussians) {
    EXPECT_THROW(generate_synthetic_scene(1, 10, 1, 2, 16, 16), std::invalid_argument);
    EXPECT_THROW(generate_synthetic_scene(1, 0, 3, 2, 16, 16), std::invalid_argument);
}

TEST(SyntheticScene, DepthZeroWhereGroundTruthIsTransparent) {
    const SceneDataset d = generate_synthetic_scene(7, 10, 2, 1, 32, 32);
    for (std::size_t v = 0; v < d.train_cameras.size(); ++v) {
        const RenderOutput r = render(*d.ground_truth_field, d.train_cameras[v], d.background);
        for (std::size_t p = 0; p < r.depth.pixels.size(); ++p) {
            if (r.accum_alpha.pixels[p] < kDepthValidAlpha) {
                EXPECT_EQ(d.train_depths[v].pixels[p], 0.0);
            } else {
                EXPECT_GT(d.train_depths[v].pixels[p], 0.0);
            }
        }
    }
}

TEST(Dataset, SaveLoadRoundTrip) {
    const SceneDataset d = generate_synthetic_scene(3, 15, 3, 2, 20, 16);
    const fs::path dir = scratch_dir("dataset");
    save_dataset(dir, d);
    EXPECT_TRUE(fs::exists(dir / "cameras.json"));
    EXPECT_TRUE(fs::exists(dir / "images" / "train_000.png"));
    EXPECT_TRUE(fs::exists(dir / "images" / "test_001.raw"));
    EXPECT_TRUE(fs::exists(dir / "gt_field.bin"));
    const SceneDataset e = load_dataset(dir);
    EXPECT_EQ(e.train_images, d.train_images);
    EXPECT_EQ(e.test_images, d.test_images);
    EXPECT_EQ(e.train_depths, d.train_depths);
    ASSERT_EQ(e.train_cameras.size(), d.train_cameras.size());
    for (std::size_t i = 0; i < d.train_cameras.size(); ++i) {
        EXPECT_EQ(e.train_cameras[i].intrinsics, d.train_cameras[i].intrinsics);
        EXPECT_EQ(e.train_cameras[i].rotation.coeffs(), d.train_cameras[i].rotation.coeffs());
        EXPECT_EQ(e.train_cameras[i].translation, d.train_cameras[i].translation);
    }
    EXPECT_EQ(e.bounds, d.bounds);
    EXPECT_TRUE(static_cast<const ParameterArrays&>(*e.ground_truth_field) ==
                static_cast<const ParameterArrays&>(*d.ground_truth_field));
}

TEST(Dataset, MalformedCamerasJsonIsFormatError) {
    const fs::path dir = scratch_dir("badcams");
    std::ofstream(dir / "cameras.json") << "{\"version\": 1, \"train\": [ {\"fx\": 1 ";
    EXPECT_THROW(load_dataset(dir), FormatError);
    std::ofstream(dir / "cameras.json") << R"({"version": 1, "train": [{"fx": 1}]})";
    EXPECT_THROW(load_dataset(dir), FormatError);
}

TEST(Dataset, CameraExtentCoversTrainingCameras) {
    const SceneDataset d = generate_synthetic_scene(7, 5, 3, 1, 16, 16);
    Vec3 mean = Vec3::Zero();
    for (const auto& c : d.train_cameras) mean += c.center();
    mean /= 3.0;
    for (const auto& c : d.train_cameras) {
        EXPECT_LE((c.center() - mean).norm() * 1.1, d.camera_extent() + 1e-12);
    }
}

}  // namespace
}  // namespace corgs
