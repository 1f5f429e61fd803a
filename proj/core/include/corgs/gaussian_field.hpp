#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace corgs {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Structure-of-arrays storage shared by Gaussian fields, their gradients and
/// optimizer moments. Row i of every array describes primitive i.
struct ParameterArrays {
    std::vector<Vec3> positions;
    std::vector<Vec3> log_scales;
    /// Quaternions stored as (w, x, y, z).
    std::vector<Vec4> rotations;
    std::vector<double> opacities;
    std::vector<Vec3> colors;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    /// True when every array has the same row count.
    bool consistent() const;

    /// Resizes every array; new rows are zero.
    void resize(std::size_t n);
    void append(const ParameterArrays& other);
    void append_row(const ParameterArrays& other, std::size_t row);
    /// Keeps rows whose `keep` flag is set, preserving order.
    void keep_rows(const std::vector<bool>& keep);
    void set_zero();

    /// Flat views of the five parameter blocks, in declaration order.
    std::array<std::span<double>, 5> blocks();
    std::array<std::span<const double>, 5> blocks() const;

    static ParameterArrays zeros(std::size_t n);

    bool operator==(const ParameterArrays& other) const;
};

/// Number of scalar parameters per primitive (3 + 3 + 4 + 1 + 3).
inline constexpr std::size_t kParamsPerPrimitive = 14;

double sigmoid(double x);
/// Inputs are clamped to [kLogitClamp, 1 - kLogitClamp] so 0 and 1 map to
/// finite logits.
inline constexpr double kLogitClamp = 1e-12;
double logit(double p);

/// A set of 3D Gaussian primitives. The stored arrays are pre-activation:
/// positions are raw, scales are logs, rotations are unnormalized
/// quaternions, opacities and colors are logits.
class GaussianField : public ParameterArrays {
public:
    Vec3 scale(std::size_t i) const { return log_scales[i].array().exp(); }
    double opacity(std::size_t i) const { return sigmoid(opacities[i]); }
    Vec3 color(std::size_t i) const;
    Eigen::Quaterniond rotation(std::size_t i) const;
    Mat3 covariance(std::size_t i) const;

    /// Throws std::invalid_argument on ragged arrays or non-finite values.
    void validate() const;
    void normalize_rotations();

    /// Axis-aligned bounds of the positions; zero box for an empty field.
    std::pair<Vec3, Vec3> bounds() const;

    /// Appends one primitive given activated values.
    void push_back(const Vec3& position, const Vec3& scale, const Eigen::Quaterniond& rotation,
                   double opacity, const Vec3& color);
};

/// Sigma = R(q) diag(s)^2 R(q)^T. Throws std::invalid_argument on non-finite
/// or non-positive scales and on a zero quaternion.
Mat3 covariance_from_scale_rotation(const Vec3& scale, const Eigen::Quaterniond& rotation);

}  // namespace corgs
