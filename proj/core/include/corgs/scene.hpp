#pragma once

#include "corgs/camera.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace corgs {

struct SceneBounds {
    Vec3 min = Vec3::Constant(-1.0);
    Vec3 max = Vec3::Constant(1.0);

    double diagonal() const { return (max - min).norm(); }
    bool operator==(const SceneBounds&) const = default;
};

/// Cameras, images and (for synthetic scenes) the ground-truth field.
/// Depth maps hold 0 where the ground-truth render is not opaque enough to
/// define a depth.
struct SceneDataset {
    std::vector<Camera> train_cameras;
    std::vector<Camera> test_cameras;
    std::vector<ImageBuffer> train_images;
    std::vector<ImageBuffer> test_images;
    std::vector<ImageBuffer> train_depths;
    std::vector<ImageBuffer> test_depths;
    std::optional<GaussianField> ground_truth_field;
    SceneBounds bounds;
    Vec3 background = Vec3::Zero();

    /// Throws std::invalid_argument when camera and image lists disagree.
    void validate() const;
    /// Radius of the sphere around the mean training-camera center that
    /// encloses all training cameras, times 1.1.
    double camera_extent() const;
};

struct SyntheticSceneOptions {
    std::uint64_t seed = 7;
    int n_gaussians = 50;
    int n_train = 3;
    int n_test = 4;
    int width = 64;
    int height = 64;
    /// Arc swept by the training cameras around the scene, in degrees.
    double train_arc_degrees = 90.0;
    double camera_radius = 4.0;
    /// Elevation of the training cameras; test cameras alternate between
    /// train_elevation - spread and train_elevation + spread.
    double train_elevation_degrees = 15.0;
    double test_elevation_spread_degrees = 10.0;
    double fov_degrees = 40.0;
    Vec3 background = Vec3::Zero();
};

/// Samples a ground-truth field inside [-1,1]^3, places cameras on an arc
/// looking at the centroid and renders all images and depth maps from the
/// ground truth. Deterministic for a fixed seed. Throws
/// std::invalid_argument when n_train < 2 or n_gaussians < 1.
SceneDataset generate_synthetic_scene(const SyntheticSceneOptions& options);

SceneDataset generate_synthetic_scene(std::uint64_t seed, int n_gaussians, int n_train, int n_test,
                                      int width, int height);

/// Writes cameras.json, images/{train,test}_NNN.{png,raw},
/// depths/{train,test}_NNN.raw and gt_field.bin.
void save_dataset(const std::filesystem::path& dir, const SceneDataset& dataset);
SceneDataset load_dataset(const std::filesystem::path& dir);

}  // namespace corgs
