#include "corgs/gaussian_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace corgs {

namespace {

template <class T>
void keep_vector(std::vector<T>& v, const std::vector<bool>& keep) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (keep[i]) {
            v[out++] = v[i];
        }
    }
    v.resize(out);
}

template <class T>
std::span<double> flat(std::vector<T>& v) {
    if constexpr (std::is_same_v<T, double>) {
        return {v.data(), v.size()};
    } else {
        static_assert(sizeof(T) == T::SizeAtCompileTime * sizeof(double));
        return {v.empty() ? nullptr : v.front().data(), v.size() * T::SizeAtCompileTime};
    }
}

template <class T>
std::span<const double> flat(const std::vector<T>& v) {
    if constexpr (std::is_same_v<T, double>) {
        return {v.data(), v.size()};
    } else {
        return {v.empty() ? nullptr : v.front().data(), v.size() * T::SizeAtCompileTime};
    }
}

}  // namespace

bool ParameterArrays::consistent() const {
    const std::size_t n = positions.size();
    return log_scales.size() == n && rotations.size() == n && opacities.size() == n && colors.size() == n;
}

void ParameterArrays::resize(std::size_t n) {
    positions.resize(n, Vec3::Zero());
    log_scales.resize(n, Vec3::Zero());
    rotations.resize(n, Vec4::Zero());
    opacities.resize(n, 0.0);
    colors.resize(n, Vec3::Zero());
}

void ParameterArrays::append(const ParameterArrays& other) {
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());
    log_scales.insert(log_scales.end(), other.log_scales.begin(), other.log_scales.end());
    rotations.insert(rotations.end(), other.rotations.begin(), other.rotations.end());
    opacities.insert(opacities.end(), other.opacities.begin(), other.opacities.end());
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
}

void ParameterArrays::append_row(const ParameterArrays& other, std::size_t row) {
    positions.push_back(other.positions[row]);
    log_scales.push_back(other.log_scales[row]);
    rotations.push_back(other.rotations[row]);
    opacities.push_back(other.opacities[row]);
    colors.push_back(other.colors[row]);
}

void ParameterArrays::keep_rows(const std::vector<bool>& keep) {
    if (keep.size() != size()) {
        throw std::invalid_argument("keep mask length does not match row count");
    }
    keep_vector(positions, keep);
    keep_vector(log_scales, keep);
    keep_vector(rotations, keep);
    keep_vector(opacities, keep);
    keep_vector(colors, keep);
}

void ParameterArrays::set_zero() {
    for (auto block : blocks()) {
        std::fill(block.begin(), block.end(), 0.0);
    }
}

std::array<std::span<double>, 5> ParameterArrays::blocks() {
    return {flat(positions), flat(log_scales), flat(rotations), flat(opacities), flat(colors)};
}

std::array<std::span<const double>, 5> ParameterArrays::blocks() const {
    return {flat(positions), flat(log_scales), flat(rotations), flat(opacities), flat(colors)};
}

ParameterArrays ParameterArrays::zeros(std::size_t n) {
    ParameterArrays p;
    p.resize(n);
    return p;
}

bool ParameterArrays::operator==(const ParameterArrays& other) const {
    if (size() != other.size()) {
        return false;
    }
    const auto a = blocks();
    const auto b = other.blocks();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!std::equal(a[k].begin(), a[k].end(), b[k].begin(), b[k].end())) {
            return false;
        }
    }
    return true;
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

double logit(double p) {
    p = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
    return std::log(p / (1.0 - p));
}

Vec3 GaussianField::color(std::size_t i) const {
    const Vec3& c = colors[i];
    return {sigmoid(c.x()), sigmoid(c.y()), sigmoid(c.z())};
}

Eigen::Quaterniond GaussianField::rotation(std::size_t i) const {
    const Vec4& r = rotations[i];
    return Eigen::Quaterniond(r[0], r[1], r[2], r[3]).normalized();
}

Mat3 GaussianField::covariance(std::size_t i) const {
    return covariance_from_scale_rotation(scale(i), rotation(i));
}

void GaussianField::validate() const {
    if (!consistent()) {
        throw std::invalid_argument("gaussian field arrays have different lengths");
    }
    const auto b = blocks();
    for (const auto& block : b) {
        for (double v : block) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("gaussian field contains non-finite values");
            }
        }
    }
    for (std::size_t i = 0; i < size(); ++i) {
        if (rotations[i].squaredNorm() == 0.0) {
            throw std::invalid_argument("zero quaternion at primitive " + std::to_string(i));
        }
    }
}

void GaussianField::normalize_rotations() {
    for (auto& r : rotations) {
        const double n = r.norm();
        if (n > 0.0) {
            r /= n;
        } else {
            r = Vec4(1.0, 0.0, 0.0, 0.0);
        }
    }
}

std::pair<Vec3, Vec3> GaussianField::bounds() const {
    if (empty()) {
        return {Vec3::Zero(), Vec3::Zero()};
    }
    Vec3 lo = positions.front();
    Vec3 hi = positions.front();
    for (const auto& p : positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

void GaussianField::push_back(const Vec3& position, const Vec3& scale, const Eigen::Quaterniond& rotation,
                              double opacity, const Vec3& color) {
    positions.push_back(position);
    log_scales.push_back(scale.array().log().matrix());
    const Eigen::Quaterniond q = rotation.normalized();
    rotations.emplace_back(q.w(), q.x(), q.y(), q.z());
    opacities.push_back(logit(opacity));
    colors.emplace_back(logit(color.x()), logit(color.y()), logit(color.z()));
}

Mat3 covariance_from_scale_rotation(const Vec3& scale, const Eigen::Quaterniond& rotation) {
    if (!scale.allFinite() || !rotation.coeffs().allFinite()) {
        throw std::invalid_argument("covariance_from_scale_rotation: non-finite input");
    }
    if ((scale.array() <= 0.0).any()) {
        throw std::invalid_argument("covariance_from_scale_rotation: scales must be positive");
    }
    if (rotation.squaredNorm() == 0.0) {
        throw std::invalid_argument("covariance_from_scale_rotation: zero quaternion");
    }
    const Mat3 m = rotation.normalized().toRotationMatrix() * scale.asDiagonal();
    return m * m.transpose();
}

}  // namespace corgs
