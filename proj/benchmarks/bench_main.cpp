#include "corgs/coregularization.hpp"
#include "corgs/kdtree.hpp"
#include "corgs/losses.hpp"
#include "corgs/metrics.hpp"
#include "corgs/parallel.hpp"
#include "corgs/rasterizer.hpp"
#include "corgs/scene.hpp"
#include "corgs/trainer.hpp"

#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

namespace {

using namespace corgs;

GaussianField bench_field(std::size_t n, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-0.8, 0.8), ls(std::log(0.02), std::log(0.15)), u(0.0, 1.0);
    GaussianField f;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Quaterniond q(u(rng) + 0.1, u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
        f.push_back(Vec3(pos(rng), pos(rng), pos(rng)), Vec3(std::exp(ls(rng)), std::exp(ls(rng)), std::exp(ls(rng))),
                    q.normalized(), 0.2 + 0.7 * u(rng), Vec3(u(rng), u(rng), u(rng)));
    }
    return f;
}

Camera bench_camera(int res) {
    return Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3::UnitY(),
                           intrinsics_from_fov(res, res, 45.0 * std::numbers::pi / 180.0));
}

void BM_RenderForward(benchmark::State& state) {
    set_num_threads(static_cast<int>(state.range(2)));
    const GaussianField f = bench_field(static_cast<std::size_t>(state.range(0)));
    const Camera cam = bench_camera(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(f, cam, Vec3::Zero()));
    }
    state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(1));
}
BENCHMARK(BM_RenderForward)
    ->ArgNames({"gaussians", "res", "threads"})
    ->Args({100, 64, 1})
    ->Args({1000, 64, 1})
    ->Args({1000, 128, 1})
    ->Args({1000, 128, 4})
    ->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
    set_num_threads(static_cast<int>(state.range(2)));
    const GaussianField f = bench_field(static_cast<std::size_t>(state.range(0)));
    const int res = static_cast<int>(state.range(1));
    const Camera cam = bench_camera(res);
    const RenderOutput out = render(f, cam, Vec3::Zero());
    const ImageBuffer upstream(res, res, 3, 1e-3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_backward(f, cam, out, upstream));
    }
}
BENCHMARK(BM_RenderBackward)
    ->ArgNames({"gaussians", "res", "threads"})
    ->Args({100, 64, 1})
    ->Args({1000, 64, 1})
    ->Args({1000, 128, 1})
    ->Args({1000, 128, 4})
    ->Unit(benchmark::kMillisecond);

void BM_SsimWithGradient(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer a(res, res, 3), b(res, res, 3);
    for (auto& v : a.pixels) v = u(rng);
    for (auto& v : b.pixels) v = u(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim_with_gradient(a, b));
    }
}
BENCHMARK(BM_SsimWithGradient)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_KdTreeBuild(benchmark::State& state) {
    const GaussianField f = bench_field(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(KdTree3(f.positions));
    }
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_KnnMatch(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const GaussianField a = bench_field(n, 1), b = bench_field(n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(knn_match(a, b, 0.05));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_KnnMatch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_FitnessRmse(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const GaussianField a = bench_field(n, 1), b = bench_field(n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fitness_rmse(a, b, 0.05));
    }
}
BENCHMARK(BM_FitnessRmse)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_TrainCorgs(benchmark::State& state) {
    set_num_threads(1);
    const SceneDataset d = generate_synthetic_scene(3, 30, 3, 1, 32, 32);
    TrainConfig c;
    c.iterations = static_cast<int>(state.range(0));
    c.log_every = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(d, c, hooks_for_mode(TrainMode::CorGS)));
    }
}
BENCHMARK(BM_TrainCorgs)->Arg(100)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
BENCHMARK_MAIN();
