#include "corgs/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace corgs {

Eigen::Vector3d Camera::to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
}

Eigen::Vector3d Camera::center() const {
    return -(rotation.conjugate() * translation);
}

void Camera::validate() const {
    const auto& k = intrinsics;
    if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.fx) || !std::isfinite(k.fy)) {
        throw std::invalid_argument("camera focal lengths must be positive and finite");
    }
    if (k.width < 1 || k.height < 1) {
        throw std::invalid_argument("camera resolution must be at least 1x1");
    }
    if (!std::isfinite(k.cx) || !std::isfinite(k.cy) || !translation.allFinite()) {
        throw std::invalid_argument("camera has non-finite parameters");
    }
    if (std::abs(rotation.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("camera rotation must be a unit quaternion");
    }
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up, const Intrinsics& intrinsics) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.squaredNorm() < 1e-20) {
        right = forward.unitOrthogonal();
    }
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);

    Eigen::Matrix3d world_to_cam;
    world_to_cam.row(0) = right.transpose();
    world_to_cam.row(1) = down.transpose();
    world_to_cam.row(2) = forward.transpose();
    return from_center(eye, Eigen::Quaterniond(world_to_cam).normalized(), intrinsics);
}

Camera Camera::from_center(const Eigen::Vector3d& center, const Eigen::Quaterniond& rotation,
                           const Intrinsics& intrinsics) {
    Camera cam;
    cam.intrinsics = intrinsics;
    cam.rotation = rotation.normalized();
    cam.translation = -(cam.rotation * center);
    return cam;
}

Intrinsics intrinsics_from_fov(int width, int height, double fov_x_radians) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width / std::tan(0.5 * fov_x_radians);
    k.fy = k.fx;
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    return k;
}

Eigen::Quaterniond slerp_shortest(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double t) {
    Eigen::Quaterniond b_aligned = b;
    if (a.dot(b) < 0.0) {
        b_aligned.coeffs() = -b.coeffs();
    }
    return a.slerp(t, b_aligned).normalized();
}

}  // namespace corgs
