#pragma once

#include "corgs/coregularization.hpp"
#include "corgs/densification.hpp"
#include "corgs/gaussian_field.hpp"
#include "corgs/optimizer.hpp"
#include "corgs/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace corgs {

/// Which co-regularization mechanisms are active.
struct CoRegHooks {
    bool co_pruning = false;
    bool pseudo_view = false;
    /// Pearson depth co-regularization at the pseudo view (off by default).
    bool pearson_depth = false;

    bool any() const { return co_pruning || pseudo_view || pearson_depth; }
};

enum class TrainMode { Baseline, CoPruning, PseudoView, CorGS };

CoRegHooks hooks_for_mode(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);
std::string to_string(TrainMode mode);

struct TrainConfig {
    int iterations = 3000;
    LearningRates learning_rates;
    int densify_from = 100;
    /// Negative means 60% of iterations.
    int densify_until = -1;
    int densify_every = 100;
    double densify_grad_threshold = 2e-4;
    double percent_dense = 0.01;
    int opacity_reset_every = 1000;
    double prune_opacity_threshold = 0.005;

    int coprune_every_k_interleaves = 5;
    /// Absolute co-pruning / fitness threshold; when unset tau_relative
    /// times the scene bounding-box diagonal is used.
    std::optional<double> tau;
    double tau_relative = 0.05;
    double lambda_dssim = 0.2;
    double lambda_pseudo = 1.0;
    double lambda_depth = 0.05;
    double pseudo_noise_scale = 0.05;

    int n_fields = 2;
    std::uint64_t seed = 0;
    /// Gives every field the same densification RNG stream.
    bool shared_rng_streams = false;
    Vec3 background = Vec3::Zero();

    int n_init_points = 100;
    double init_opacity = 0.1;
    /// Iterations between disagreement log rows (0 disables periodic rows).
    int log_every = 50;

    int densify_until_resolved() const;
    double tau_for(const SceneBounds& bounds) const;
    /// Throws std::invalid_argument on out-of-contract values.
    void validate() const;
};

struct TrainingLogRow {
    int iteration = 0;
    std::vector<double> loss;
    std::vector<std::size_t> counts;
    double fitness = 0.0;
    double rmse = 0.0;
    double psnr_between = 0.0;
    double depth_abs_rel_between = 0.0;
    int densify_events = 0;
    int coprune_events = 0;
};

struct TrainingLog {
    int n_fields = 0;
    double tau = 0.0;
    std::vector<TrainingLogRow> rows;
    std::vector<std::string> warnings;

    /// `# corgs-training-log v1` comment line followed by a CSV header and one row per entry.
    void write_csv(std::ostream& out) const;
    const TrainingLogRow* row_at(int iteration) const;
};

struct TrainResult {
    /// Field 0 is the one kept for inference.
    std::vector<GaussianField> fields;
    TrainingLog log;
};

/// Initial point cloud shared by all fields: points uniform in the scene
/// bounds, isotropic scales from the mean distance to the 3 nearest
/// neighbors, identity rotations, gray color, opacity `init_opacity`.
GaussianField initialize_field(const SceneBounds& bounds, int n_points, double init_opacity, std::uint64_t seed);

/// Trains config.n_fields fields on the training views. Throws
/// NumericalError naming the iteration and field when a loss goes
/// non-finite, std::invalid_argument on config/dataset contract violations.
TrainResult train(const SceneDataset& dataset, const TrainConfig& config, const CoRegHooks& hooks);

/// Variant that starts from caller-provided fields (one per field).
TrainResult train(const SceneDataset& dataset, const TrainConfig& config, const CoRegHooks& hooks,
                  std::vector<GaussianField> initial_fields);

}  // namespace corgs
