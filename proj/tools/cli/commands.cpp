#include "cli/cli.hpp"
#include "cli/config_file.hpp"
#include "cli/manifest.hpp"

#include "corgs/disagreement_study.hpp"
#include "corgs/errors.hpp"
#include "corgs/field_io.hpp"
#include "corgs/metrics.hpp"
#include "corgs/parallel.hpp"
#include "corgs/rasterizer.hpp"
#include "corgs/scene.hpp"
#include "corgs/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace corgs::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Raised for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvTarget {
    std::ofstream file;
    std::ostream* stream = nullptr;

    CsvTarget(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream = &fallback;
        } else {
            file.open(path, std::ios::binary);
            if (!file) {
                throw std::runtime_error("cannot write " + path);
            }
            stream = &file;
        }
    }
    std::ostream& operator*() { return *stream; }
};

std::string iso_time_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream(path, std::ios::binary) << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 7;
    int gaussians = 50;
    int train_views = 3;
    int test_views = 4;
    int res = 64;
    bool force = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    if (a.train_views < 2) {
        throw UsageError("--train-views must be at least 2 (pseudo views interpolate between training views)");
    }
    if (a.gaussians < 1 || a.test_views < 0 || a.res < 1) {
        throw UsageError("--gaussians and --res must be positive, --test-views non-negative");
    }
    const fs::path dir(a.out);
    if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir))) {
        if (!a.force) {
            throw UsageError("output " + a.out + " already exists; pass --force to overwrite");
        }
        fs::remove_all(dir);
    }
    SyntheticSceneOptions o;
    o.seed = a.seed;
    o.n_gaussians = a.gaussians;
    o.n_train = a.train_views;
    o.n_test = a.test_views;
    o.width = o.height = a.res;
    save_dataset(dir, generate_synthetic_scene(o));
    out << "wrote synthetic scene to " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string out;
    std::string mode;
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<int> fields;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<double> tau_rel;
    std::optional<double> tau_abs;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig config;
    CoRegHooks hooks;
    const TrainMode mode = a.mode.empty() ? TrainMode::Baseline : parse_train_mode(a.mode);
    config.n_fields = mode == TrainMode::Baseline ? 1 : 2;

    if (!a.config_file.empty()) {
        for (const auto& [k, v] : read_config_file(a.config_file)) {
            apply_config_entry(config, hooks, k, v);
        }
    }
    if (!a.mode.empty() || a.config_file.empty()) {
        const CoRegHooks from_mode = hooks_for_mode(mode);
        hooks.co_pruning = from_mode.co_pruning;
        hooks.pseudo_view = from_mode.pseudo_view;
    }
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects key=value, got '" + kv + "'");
        }
        apply_config_entry(config, hooks, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.fields) {
        config.n_fields = *a.fields;
    }
    if (a.seed) {
        config.seed = *a.seed;
    }
    if (a.iterations) {
        config.iterations = *a.iterations;
    }
    if (a.tau_rel) {
        config.tau_relative = *a.tau_rel;
        config.tau.reset();
    }
    if (a.tau_abs) {
        config.tau = *a.tau_abs;
    }
    config.validate();
    if (hooks.any() && config.n_fields < 2) {
        throw UsageError("co-regularization needs --fields >= 2");
    }

    const fs::path data_dir(a.data);
    const SceneDataset dataset = load_dataset(data_dir);
    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);

    const DirectoryHash inputs = hash_directory(data_dir);
    ordered_json manifest;
    manifest["format"] = "corgs-manifest";
    manifest["version"] = 1;
    manifest["command"] = "train";
    manifest["mode"] = a.mode.empty() ? std::string("config") : to_string(mode);
    manifest["seed"] = config.seed;
    manifest["threads"] = num_threads();
    manifest["config"] = config_snapshot(config, hooks);
    manifest["input"] = {{"dataset", fs::absolute(data_dir).lexically_normal().string()},
                         {"content_hash", inputs.combined}};
    ordered_json outputs = ordered_json::array();
    for (int k = 0; k < config.n_fields; ++k) {
        outputs.push_back("field_" + std::to_string(k) + ".bin");
    }
    outputs.push_back("training_log.csv");
    manifest["outputs"] = outputs;
    manifest["status"] = "started";
    manifest["started_at"] = iso_time_now();
    write_json(out_dir / "manifest.json", manifest);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    try {
        result = train(dataset, config, hooks);
    } catch (const NumericalError&) {
        manifest["status"] = "diverged";
        write_json(out_dir / "manifest.json", manifest);
        throw;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (std::size_t k = 0; k < result.fields.size(); ++k) {
        save_field(result.fields[k], out_dir / ("field_" + std::to_string(k) + ".bin"));
    }
    {
        std::ofstream log(out_dir / "training_log.csv", std::ios::binary);
        result.log.write_csv(log);
    }
    manifest["status"] = "completed";
    manifest["timings"] = {{"train_seconds", seconds}};
    manifest["warnings"] = result.log.warnings;
    write_json(out_dir / "manifest.json", manifest);

    out << "trained " << result.fields.size() << " field(s), mode " << manifest["mode"].get<std::string>()
        << ", kept field has " << result.fields[0].size() << " gaussians; outputs in " << a.out << '\n';
    for (const auto& w : result.log.warnings) {
        out << "warning: " << w << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string data;
    std::string field;
    std::string out;
    bool geometry = false;
    double tau_rel = 0.05;
    std::optional<double> tau_abs;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const SceneDataset dataset = load_dataset(a.data);
    const GaussianField field = load_field(a.field);
    std::optional<double> tau;
    if (a.geometry) {
        if (!dataset.ground_truth_field) {
            throw std::runtime_error("dataset " + a.data + " has no gt_field.bin; Fitness/RMSE cannot be computed");
        }
        tau = a.tau_abs ? *a.tau_abs : a.tau_rel * dataset.bounds.diagonal();
    }
    const EvaluationSummary s = evaluate(field, dataset, tau);
    CsvTarget csv(a.out, out);
    *csv << "# corgs-eval v1\n";
    *csv << "view,psnr,ssim,abs_error_rel,gaussians,fitness,rmse\n";
    for (const auto& v : s.views) {
        *csv << v.view << ',' << num(v.psnr) << ',' << num(v.ssim) << ',' << num(v.abs_error_rel) << ",,,\n";
    }
    *csv << "mean," << num(s.mean_psnr) << ',' << num(s.mean_ssim) << ',' << num(s.mean_abs_error_rel) << ','
         << s.gaussian_count << ',';
    if (s.geometry) {
        *csv << num(s.geometry->fitness) << ',' << num(s.geometry->rmse);
    } else {
        *csv << ',';
    }
    *csv << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- study

struct StudyArgs {
    std::string data;
    std::string field_a;
    std::string field_b;
    std::string out;
    std::string split = "test";
    std::string score = "color";
    std::vector<double> percentiles;
};

int cmd_study(const StudyArgs& a, std::ostream& out) {
    const SceneDataset dataset = load_dataset(a.data);
    const GaussianField fa = load_field(a.field_a);
    const GaussianField fb = load_field(a.field_b);
    const bool test = a.split == "test";
    StudyInputs inputs;
    inputs.views = test ? dataset.test_cameras : dataset.train_cameras;
    inputs.gt_images = test ? dataset.test_images : dataset.train_images;
    inputs.gt_depths = test ? dataset.test_depths : dataset.train_depths;
    const std::vector<double> percentiles = a.percentiles.empty() ? default_study_percentiles() : a.percentiles;
    for (double p : percentiles) {
        if (!(p >= 0.0 && p < 100.0)) {
            throw UsageError("percentiles must lie in [0, 100), got " + num(p));
        }
    }
    const auto rows = disagreement_study(fa, fb, inputs, percentiles, dataset.background,
                                         a.score == "depth" ? DisagreementScore::Depth : DisagreementScore::Color);
    CsvTarget csv(a.out, out);
    *csv << "# corgs-study v1\n";
    *csv << "view,percentile,kept_pixels,psnr,abs_error_rel\n";
    for (const auto& r : rows) {
        *csv << r.view << ',' << num(r.percentile) << ',' << r.kept_pixels << ',' << num(r.psnr) << ','
             << num(r.abs_error_rel) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string data;
    std::string field;
    std::string view = "test:0";
    std::string out = "render";
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
    const auto colon = a.view.find(':');
    if (colon == std::string::npos) {
        throw UsageError("--view expects split:index, e.g. test:2");
    }
    const std::string split = a.view.substr(0, colon);
    if (split != "train" && split != "test") {
        throw UsageError("--view split must be train or test");
    }
    std::size_t index = 0;
    try {
        index = std::stoul(a.view.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("--view index is not a number: " + a.view);
    }
    const SceneDataset dataset = load_dataset(a.data);
    const auto& cams = split == "test" ? dataset.test_cameras : dataset.train_cameras;
    if (index >= cams.size()) {
        throw UsageError("--view " + a.view + " out of range (" + std::to_string(cams.size()) + " views)");
    }
    const GaussianField field = load_field(a.field);
    const RenderOutput r = render(field, cams[index], dataset.background);
    const fs::path prefix(a.out);
    if (prefix.has_parent_path()) {
        fs::create_directories(prefix.parent_path());
    }
    write_png(prefix.string() + ".png", r.color);
    write_raw_image(prefix.string() + ".raw", r.color);
    write_raw_image(prefix.string() + "_depth.raw", r.depth);
    out << "wrote " << prefix.string() << ".png, " << prefix.string() << ".raw, " << prefix.string()
        << "_depth.raw\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"corgs: co-regularized sparse-view gaussian splatting"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for rendering and metrics")->check(CLI::PositiveNumber);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic scene dataset");
    s->add_option("--out,-o", synth.out, "output dataset directory")->required();
    s->add_option("--seed", synth.seed);
    s->add_option("--gaussians", synth.gaussians);
    s->add_option("--train-views", synth.train_views);
    s->add_option("--test-views", synth.test_views);
    s->add_option("--res", synth.res, "image width and height");
    s->add_flag("--force", synth.force, "overwrite an existing output directory");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train one or more fields");
    t->add_option("--data,-d", tr.data, "dataset directory")->required();
    t->add_option("--out,-o", tr.out, "output directory")->required();
    t->add_option("--mode", tr.mode, "baseline | copruning | pseudoview | corgs")
        ->check(CLI::IsMember({"baseline", "copruning", "pseudoview", "corgs"}));
    t->add_option("--config", tr.config_file, "key=value config file");
    t->add_option("--set", tr.overrides, "key=value override (repeatable)");
    t->add_option("--fields", tr.fields);
    t->add_option("--seed", tr.seed);
    t->add_option("--iterations", tr.iterations);
    auto* rel = t->add_option("--tau-rel", tr.tau_rel, "tau as a fraction of the scene diagonal");
    t->add_option("--tau-absolute", tr.tau_abs, "absolute tau in world units")->excludes(rel);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "evaluate a field on the test views");
    e->add_option("--data,-d", ev.data)->required();
    e->add_option("--field,-f", ev.field)->required();
    e->add_option("--out,-o", ev.out, "CSV path (default stdout)");
    e->add_flag("--geometry", ev.geometry, "also report Fitness/RMSE against gt_field.bin");
    auto* erel = e->add_option("--tau-rel", ev.tau_rel);
    e->add_option("--tau-absolute", ev.tau_abs)->excludes(erel);

    StudyArgs st;
    auto* sd = app.add_subcommand("study", "mask-out disagreement study between two fields");
    sd->add_option("--data,-d", st.data)->required();
    sd->add_option("--field-a", st.field_a)->required();
    sd->add_option("--field-b", st.field_b)->required();
    sd->add_option("--out,-o", st.out, "CSV path (default stdout)");
    sd->add_option("--split", st.split)->check(CLI::IsMember({"train", "test"}));
    sd->add_option("--score", st.score)->check(CLI::IsMember({"color", "depth"}));
    sd->add_option("--percentiles", st.percentiles, "comma separated, each in [0,100)")->delimiter(',');

    RenderArgs rn;
    auto* r = app.add_subcommand("render", "render a field at a dataset view");
    r->add_option("--data,-d", rn.data)->required();
    r->add_option("--field,-f", rn.field)->required();
    r->add_option("--view", rn.view, "split:index, e.g. test:2");
    r->add_option("--out,-o", rn.out, "output path prefix");

    for (auto* sub : {s, t, e, sd, r}) {
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) {
            reversed.pop_back();
        }
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    set_num_threads(threads);
    try {
        if (*s) return cmd_synth(synth, out);
        if (*t) return cmd_train(tr, out);
        if (*e) return cmd_eval(ev, out);
        if (*sd) return cmd_study(st, out);
        if (*r) return cmd_render(rn, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& ex) {
        err << "numerical failure: " << ex.what() << '\n';
        return kExitNumerical;
    } catch (const FormatError& ex) {
        err << "format error: " << ex.what() << '\n';
        return kExitData;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace corgs::cli
