#pragma once

#include "corgs/gaussian_field.hpp"

#include <cstdint>

namespace corgs {

struct LearningRates {
    double position = 1.6e-4;
    double position_final = 1.6e-6;
    double scale = 5e-3;
    double rotation = 1e-3;
    double opacity = 5e-2;
    double color = 2.5e-3;
};

/// Learning rates in effect for one step, one per parameter block.
struct StepLearningRates {
    double position = 0.0;
    double scale = 0.0;
    double rotation = 0.0;
    double opacity = 0.0;
    double color = 0.0;
};

/// Position rate decays log-linearly from `position` to `position_final`
/// over `max_iterations`; both ends are multiplied by `spatial_scale`.
StepLearningRates learning_rates_at(const LearningRates& rates, int iteration, int max_iterations,
                                    double spatial_scale);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-15;

/// Adam moments with one row per primitive. Rows are added zeroed and
/// dropped together with the field rows they track.
struct OptimizerState {
    ParameterArrays first_moment;
    ParameterArrays second_moment;
    std::int64_t step = 0;

    OptimizerState() = default;
    explicit OptimizerState(std::size_t n);

    std::size_t size() const { return first_moment.size(); }
    void add_zero_rows(std::size_t n);
    void keep_rows(const std::vector<bool>& keep);
    void reset_opacity_moments();
};

/// One Adam step in pre-activation space followed by quaternion
/// renormalization. Throws std::invalid_argument on shape mismatch.
void optimize_step(GaussianField& field, OptimizerState& state, const ParameterArrays& gradients,
                   const StepLearningRates& rates);

}  // namespace corgs
