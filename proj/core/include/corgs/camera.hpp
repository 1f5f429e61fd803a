#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace corgs {

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    bool operator==(const Intrinsics&) const = default;
};

/// Pinhole camera. The pose maps world to camera coordinates:
/// x_cam = R(rotation) * x_world + translation. Camera looks down +z with
/// +y pointing down in the image (OpenCV convention).
struct Camera {
    Intrinsics intrinsics;
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;
    /// Camera center in world coordinates.
    Eigen::Vector3d center() const;
    int width() const { return intrinsics.width; }
    int height() const { return intrinsics.height; }

    /// Throws std::invalid_argument if focal lengths, resolution or the
    /// rotation norm are out of contract.
    void validate() const;

    /// Builds a camera at `eye` looking at `target`. `up` is the world
    /// direction that should appear upward in the image.
    static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                          const Eigen::Vector3d& up, const Intrinsics& intrinsics);
    /// Builds a camera from its world-space center and world-to-camera rotation.
    static Camera from_center(const Eigen::Vector3d& center, const Eigen::Quaterniond& rotation,
                              const Intrinsics& intrinsics);
};

/// Pinhole intrinsics for a square image with the given horizontal field of view.
Intrinsics intrinsics_from_fov(int width, int height, double fov_x_radians);

/// Spherical interpolation between two unit quaternions, taking the short arc.
Eigen::Quaterniond slerp_shortest(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double t);

}  // namespace corgs
