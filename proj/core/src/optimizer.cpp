#include "corgs/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corgs {

StepLearningRates learning_rates_at(const LearningRates& rates, int iteration, int max_iterations,
                                    double spatial_scale) {
    const double t = max_iterations > 0 ? std::clamp(static_cast<double>(iteration) / max_iterations, 0.0, 1.0) : 1.0;
    StepLearningRates lr;
    lr.position = spatial_scale * std::exp(std::log(rates.position) * (1.0 - t) + std::log(rates.position_final) * t);
    lr.scale = rates.scale;
    lr.rotation = rates.rotation;
    lr.opacity = rates.opacity;
    lr.color = rates.color;
    return lr;
}

OptimizerState::OptimizerState(std::size_t n)
    : first_moment(ParameterArrays::zeros(n)), second_moment(ParameterArrays::zeros(n)) {}

void OptimizerState::add_zero_rows(std::size_t n) {
    first_moment.resize(first_moment.size() + n);
    second_moment.resize(second_moment.size() + n);
}

void OptimizerState::keep_rows(const std::vector<bool>& keep) {
    first_moment.keep_rows(keep);
    second_moment.keep_rows(keep);
}

void OptimizerState::reset_opacity_moments() {
    std::fill(first_moment.opacities.begin(), first_moment.opacities.end(), 0.0);
    std::fill(second_moment.opacities.begin(), second_moment.opacities.end(), 0.0);
}

void optimize_step(GaussianField& field, OptimizerState& state, const ParameterArrays& gradients,
                   const StepLearningRates& rates) {
    if (gradients.size() != field.size() || !gradients.consistent() || state.size() != field.size()) {
        throw std::invalid_argument("optimize_step: gradient/optimizer shapes do not match the field");
    }
    ++state.step;
    const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    const double lrs[5] = {rates.position, rates.scale, rates.rotation, rates.opacity, rates.color};

    auto params = field.blocks();
    const auto grads = gradients.blocks();
    auto m = state.first_moment.blocks();
    auto v = state.second_moment.blocks();
    for (std::size_t block = 0; block < params.size(); ++block) {
        const double step_size = lrs[block] / bias1;
        const double inv_sqrt_bias2 = 1.0 / std::sqrt(bias2);
        for (std::size_t i = 0; i < params[block].size(); ++i) {
            const double g = grads[block][i];
            m[block][i] = kAdamBeta1 * m[block][i] + (1.0 - kAdamBeta1) * g;
            v[block][i] = kAdamBeta2 * v[block][i] + (1.0 - kAdamBeta2) * g * g;
            const double denom = std::sqrt(v[block][i]) * inv_sqrt_bias2 + kAdamEpsilon;
            params[block][i] -= step_size * m[block][i] / denom;
        }
    }
    field.normalize_rotations();
}

}  // namespace corgs
