#include "corgs/trainer.hpp"

#include "corgs/errors.hpp"
#include "corgs/metrics.hpp"
#include "corgs/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace corgs {

CoRegHooks hooks_for_mode(TrainMode mode) {
    switch (mode) {
        case TrainMode::Baseline:
            return {};
        case TrainMode::CoPruning:
            return {.co_pruning = true};
        case TrainMode::PseudoView:
            return {.pseudo_view = true};
        case TrainMode::CorGS:
            return {.co_pruning = true, .pseudo_view = true};
    }
    return {};
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "baseline") return TrainMode::Baseline;
    if (name == "copruning") return TrainMode::CoPruning;
    if (name == "pseudoview") return TrainMode::PseudoView;
    if (name == "corgs") return TrainMode::CorGS;
    throw std::invalid_argument("unknown training mode '" + name + "'");
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::Baseline: return "baseline";
        case TrainMode::CoPruning: return "copruning";
        case TrainMode::PseudoView: return "pseudoview";
        case TrainMode::CorGS: return "corgs";
    }
    return "baseline";
}

int TrainConfig::densify_until_resolved() const {
    return densify_until >= 0 ? densify_until : static_cast<int>(0.6 * iterations);
}

double TrainConfig::tau_for(const SceneBounds& bounds) const {
    return tau ? *tau : tau_relative * bounds.diagonal();
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw std::invalid_argument(std::string("TrainConfig: ") + what);
        }
    };
    require(iterations >= 0, "iterations must be non-negative");
    require(densify_every >= 1 && coprune_every_k_interleaves >= 1 && opacity_reset_every >= 1,
            "cadences must be >= 1");
    require(densify_from >= 0, "densify_from must be non-negative");
    require(lambda_dssim >= 0.0 && lambda_dssim <= 1.0, "lambda_dssim must lie in [0, 1]");
    require(lambda_pseudo >= 0.0 && lambda_depth >= 0.0, "loss weights must be non-negative");
    require(!tau || *tau > 0.0, "tau must be positive");
    require(tau_relative > 0.0, "tau_relative must be positive");
    require(pseudo_noise_scale >= 0.0, "pseudo_noise_scale must be non-negative");
    require(n_fields >= 1, "n_fields must be >= 1");
    require(n_init_points >= 1, "n_init_points must be >= 1");
    require(init_opacity > 0.0 && init_opacity < 1.0, "init_opacity must lie in (0, 1)");
    require(log_every >= 0, "log_every must be non-negative");
}

const TrainingLogRow* TrainingLog::row_at(int iteration) const {
    for (const auto& r : rows) {
        if (r.iteration == iteration) {
            return &r;
        }
    }
    return nullptr;
}

namespace {

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x636f7267u};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t kCoregStream = 1000;
constexpr std::uint64_t kInitStream = 2000;

void add_into(ParameterArrays& dst, const ParameterArrays& src) {
    auto d = dst.blocks();
    const auto s = src.blocks();
    for (std::size_t b = 0; b < d.size(); ++b) {
        for (std::size_t i = 0; i < d[b].size(); ++i) {
            d[b][i] += s[b][i];
        }
    }
}

void add_scaled(ImageBuffer& dst, const ImageBuffer& src, double w) {
    for (std::size_t i = 0; i < dst.pixels.size(); ++i) {
        dst.pixels[i] += w * src.pixels[i];
    }
}

class Trainer {
public:
    Trainer(const SceneDataset& dataset, const TrainConfig& config, const CoRegHooks& hooks,
            std::vector<GaussianField> fields)
        : dataset_(dataset), config_(config), hooks_(hooks), fields_(std::move(fields)) {
        const std::size_t n = fields_.size();
        tau_ = config_.tau_for(dataset_.bounds);
        spatial_scale_ = dataset_.camera_extent();
        densify_until_ = config_.densify_until_resolved();
        for (std::size_t k = 0; k < n; ++k) {
            states_.emplace_back(fields_[k].size());
            stats_.emplace_back(fields_[k].size());
            rngs_.push_back(make_rng(config_.seed, config_.shared_rng_streams ? 0 : k));
        }
        coreg_rng_ = make_rng(config_.seed, kCoregStream);
        for (const auto& v : midpoint_pseudo_views(dataset_.train_cameras)) {
            measure_views_.push_back(v.camera);
        }
        log_.n_fields = static_cast<int>(n);
        log_.tau = tau_;
        last_loss_.assign(n, std::numeric_limits<double>::quiet_NaN());
    }

    TrainResult run() {
        for (std::size_t k = 0; k < fields_.size(); ++k) {
            const RenderOutput out = render(fields_[k], dataset_.train_cameras[0], config_.background);
            last_loss_[k] = photometric_loss(out.color, dataset_.train_images[0], config_.lambda_dssim).value;
        }
        record(0);
        for (int it = 1; it <= config_.iterations; ++it) {
            step(it);
            densify(it);
            if ((config_.log_every > 0 && it % config_.log_every == 0) || it == config_.iterations) {
                record(it);
            }
        }
        return {std::move(fields_), std::move(log_)};
    }

private:
    void step(int it) {
        const std::size_t n = fields_.size();
        const StepLearningRates lr =
            learning_rates_at(config_.learning_rates, it, config_.iterations, spatial_scale_);
        const std::size_t view = static_cast<std::size_t>(it - 1) % dataset_.train_cameras.size();
        const Camera& camera = dataset_.train_cameras[view];

        std::vector<ParameterArrays> grads(n);
        std::vector<double> loss(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const RenderOutput out = render(fields_[k], camera, config_.background);
            const ImagePairLoss l = photometric_loss(out.color, dataset_.train_images[view], config_.lambda_dssim);
            loss[k] = l.value;
            RenderGradients g = render_backward(fields_[k], camera, out, l.grad_a);
            if (it <= densify_until_) {
                stats_[k].add(g);
            }
            grads[k] = std::move(g.params);
        }
        last_loss_ = loss;

        const bool pseudo_active = n >= 2 && densify_events_ >= 1 && (hooks_.pseudo_view || hooks_.pearson_depth);
        if (pseudo_active) {
            const PseudoView pv = sample_pseudo_view(dataset_.train_cameras, coreg_rng_, config_.pseudo_noise_scale);
            std::vector<RenderOutput> renders;
            renders.reserve(n);
            for (std::size_t k = 0; k < n; ++k) {
                renders.push_back(render(fields_[k], pv.camera, config_.background));
            }
            std::vector<ImageBuffer> grad_color(n, ImageBuffer(pv.camera.width(), pv.camera.height(), 3));
            std::vector<ImageBuffer> grad_depth(n, ImageBuffer(pv.camera.width(), pv.camera.height(), 1));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (hooks_.pseudo_view) {
                        const ImagePairLoss r =
                            color_coreg_loss(renders[i].color, renders[j].color, config_.lambda_dssim);
                        loss[i] += config_.lambda_pseudo * r.value;
                        loss[j] += config_.lambda_pseudo * r.value;
                        add_scaled(grad_color[i], r.grad_a, config_.lambda_pseudo);
                        add_scaled(grad_color[j], r.grad_b, config_.lambda_pseudo);
                    }
                    if (hooks_.pearson_depth) {
                        std::vector<bool> valid(renders[i].depth.pixel_count());
                        for (std::size_t p = 0; p < valid.size(); ++p) {
                            valid[p] = renders[i].accum_alpha.pixels[p] >= kDepthValidAlpha &&
                                       renders[j].accum_alpha.pixels[p] >= kDepthValidAlpha;
                        }
                        if (std::count(valid.begin(), valid.end(), true) >= 2) {
                            const PearsonLoss d = pearson_depth_coreg(renders[i].depth, renders[j].depth, valid);
                            loss[i] += config_.lambda_depth * d.value;
                            loss[j] += config_.lambda_depth * d.value;
                            add_scaled(grad_depth[i], d.grad_a, config_.lambda_depth);
                            add_scaled(grad_depth[j], d.grad_b, config_.lambda_depth);
                        }
                    }
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const RenderGradients g = render_backward(fields_[k], pv.camera, renders[k], grad_color[k],
                                                          hooks_.pearson_depth ? &grad_depth[k] : nullptr);
                add_into(grads[k], g.params);
            }
        }

        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(loss[k])) {
                throw NumericalError("training diverged: non-finite loss at iteration " + std::to_string(it) +
                                     " in field " + std::to_string(k));
            }
            optimize_step(fields_[k], states_[k], grads[k], lr);
        }
    }

    void densify(int it) {
        if (it > densify_until_) {
            return;
        }
        const std::size_t n = fields_.size();
        if (it >= config_.densify_from && it % config_.densify_every == 0) {
            DensifyParams params;
            params.grad_threshold = config_.densify_grad_threshold;
            params.percent_dense = config_.percent_dense;
            params.prune_opacity_threshold = config_.prune_opacity_threshold;
            for (std::size_t k = 0; k < n; ++k) {
                const auto avg = stats_[k].average();
                densify_and_prune(fields_[k], states_[k], avg, params, spatial_scale_, rngs_[k]);
                check_rows(k);
            }
            ++densify_events_;
            if (hooks_.co_pruning && n >= 2 && densify_events_ % config_.coprune_every_k_interleaves == 0) {
                const CoPruneReport report = co_prune(fields_, states_, tau_);
                ++coprune_events_;
                for (const auto& w : report.warnings) {
                    log_.warnings.push_back("iteration " + std::to_string(it) + ": " + w);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    check_rows(k);
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                stats_[k].reset(fields_[k].size());
            }
        }
        if (it % config_.opacity_reset_every == 0) {
            for (std::size_t k = 0; k < n; ++k) {
                reset_opacity(fields_[k], states_[k]);
            }
        }
    }

    void check_rows(std::size_t k) const {
        if (states_[k].size() != fields_[k].size() || !fields_[k].consistent()) {
            throw std::logic_error("optimizer rows out of sync with field " + std::to_string(k));
        }
    }

    void record(int it) {
        TrainingLogRow row;
        row.iteration = it;
        row.loss = last_loss_;
        for (const auto& f : fields_) {
            row.counts.push_back(f.size());
        }
        row.densify_events = densify_events_;
        row.coprune_events = coprune_events_;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.fitness = row.rmse = row.psnr_between = row.depth_abs_rel_between = nan;
        if (fields_.size() >= 2) {
            double fit = 0.0, rmse = 0.0, psnr_b = 0.0, depth = 0.0;
            int pairs = 0, rmse_n = 0, psnr_n = 0, depth_n = 0;
            for (std::size_t i = 0; i < fields_.size(); ++i) {
                for (std::size_t j = i + 1; j < fields_.size(); ++j) {
                    const DisagreementReport r = measure_disagreement(fields_[i], fields_[j], measure_views_,
                                                                      config_.background, tau_);
                    fit += r.fitness;
                    ++pairs;
                    if (!std::isnan(r.rmse)) {
                        rmse += r.rmse;
                        ++rmse_n;
                    }
                    if (const double p = r.mean_psnr_between(); !std::isnan(p)) {
                        psnr_b += p;
                        ++psnr_n;
                    }
                    if (const double d = r.mean_depth_abs_error_rel(); !std::isnan(d)) {
                        depth += d;
                        ++depth_n;
                    }
                }
            }
            row.fitness = fit / pairs;
            row.rmse = rmse_n > 0 ? rmse / rmse_n : nan;
            row.psnr_between = psnr_n > 0 ? psnr_b / psnr_n : nan;
            row.depth_abs_rel_between = depth_n > 0 ? depth / depth_n : nan;
        }
        log_.rows.push_back(std::move(row));
    }

    const SceneDataset& dataset_;
    TrainConfig config_;
    CoRegHooks hooks_;
    std::vector<GaussianField> fields_;
    std::vector<OptimizerState> states_;
    std::vector<GradientStats> stats_;
    std::vector<std::mt19937_64> rngs_;
    std::mt19937_64 coreg_rng_;
    std::vector<Camera> measure_views_;
    std::vector<double> last_loss_;
    TrainingLog log_;
    double tau_ = 0.0;
    double spatial_scale_ = 1.0;
    int densify_until_ = 0;
    int densify_events_ = 0;
    int coprune_events_ = 0;
};

}  // namespace

void TrainingLog::write_csv(std::ostream& out) const {
    out << "# corgs-training-log v1\n";
    out << "iteration";
    for (int k = 0; k < n_fields; ++k) {
        out << ",loss_f" << k;
    }
    for (int k = 0; k < n_fields; ++k) {
        out << ",count_f" << k;
    }
    out << ",fitness,rmse,psnr_between,depth_abs_rel_between,densify_events,coprune_events\n";
    for (const auto& r : rows) {
        out << r.iteration;
        for (double l : r.loss) {
            out << ',' << format_number(l);
        }
        for (std::size_t c : r.counts) {
            out << ',' << c;
        }
        out << ',' << format_number(r.fitness) << ',' << format_number(r.rmse) << ',' << format_number(r.psnr_between)
            << ',' << format_number(r.depth_abs_rel_between) << ',' << r.densify_events << ',' << r.coprune_events
            << '\n';
    }
}

GaussianField initialize_field(const SceneBounds& bounds, int n_points, double init_opacity, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, kInitStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> points(static_cast<std::size_t>(n_points));
    for (auto& p : points) {
        for (int k = 0; k < 3; ++k) {
            p[k] = bounds.min[k] + (bounds.max[k] - bounds.min[k]) * unit(rng);
        }
    }
    GaussianField field;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j != i) {
                d.push_back((points[i] - points[j]).norm());
            }
        }
        double scale = 0.1 * bounds.diagonal();
        if (!d.empty()) {
            const std::size_t k = std::min<std::size_t>(3, d.size());
            std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
            double sum = 0.0;
            for (std::size_t m = 0; m < k; ++m) {
                sum += d[m];
            }
            scale = std::max(sum / static_cast<double>(k), 1e-7);
        }
        field.push_back(points[i], Vec3::Constant(scale), Eigen::Quaterniond::Identity(), init_opacity,
                        Vec3::Constant(0.5));
    }
    return field;
}

TrainResult train(const SceneDataset& dataset, const TrainConfig& config, const CoRegHooks& hooks) {
    config.validate();
    const GaussianField init = initialize_field(dataset.bounds, config.n_init_points, config.init_opacity, config.seed);
    return train(dataset, config, hooks, std::vector<GaussianField>(static_cast<std::size_t>(config.n_fields), init));
}

TrainResult train(const SceneDataset& dataset, const TrainConfig& config, const CoRegHooks& hooks,
                  std::vector<GaussianField> initial_fields) {
    config.validate();
    dataset.validate();
    if (dataset.train_cameras.empty()) {
        throw std::invalid_argument("train: dataset has no training views");
    }
    if (static_cast<int>(initial_fields.size()) != config.n_fields) {
        throw std::invalid_argument("train: need one initial field per configured field");
    }
    if (hooks.any() && config.n_fields < 2) {
        throw std::invalid_argument("train: co-regularization needs at least two fields");
    }
    if ((hooks.pseudo_view || hooks.pearson_depth) && dataset.train_cameras.size() < 2) {
        throw std::invalid_argument("train: pseudo-view co-regularization needs at least two training views");
    }
    for (auto& f : initial_fields) {
        f.validate();
    }
    Trainer trainer(dataset, config, hooks, std::move(initial_fields));
    return trainer.run();
}

}  // namespace corgs
