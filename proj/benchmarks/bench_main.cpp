#include <random>

#include <benchmark/benchmark.h>

#include "gsrecon/calib.hpp"
#include "gsrecon/model.hpp"
#include "gsrecon/renderer.hpp"
#include "gsrecon/synth.hpp"

namespace {

using namespace gsr;

std::vector<GaussianPrimitive> random_splats(std::size_t count) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GaussianPrimitive> prims(count);
  for (auto& g : prims) {
    g.mu = Vec3(u(rng), u(rng), 3.0 + u(rng));
    g.rotation = Quat{u(rng), u(rng), u(rng), u(rng)}.normalized();
    g.scale = Vec3::Constant(0.02 + 0.05 * std::abs(u(rng)));
    g.opacity = 0.5 + 0.5 * std::abs(u(rng));
  }
  return prims;
}

void BM_Render(benchmark::State& state) {
  const auto prims = random_splats(static_cast<std::size_t>(state.range(0)));
  const Intrinsics k{28.0, 32, 32};
  for (auto _ : state) benchmark::DoNotOptimize(render(prims, SE3Pose::identity(), k, Vec3::Ones()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Render)->Arg(1024)->Arg(4096);

void BM_ModelForwardBackward(benchmark::State& state) {
  ModelConfig c;
  Transformer<float> model(c);
  model.initialize(0);
  const int views = static_cast<int>(state.range(0));
  const std::vector<Image> images(static_cast<std::size_t>(views), Image(c.image_width, c.image_height, 3, 0.5));
  for (auto _ : state) {
    Transformer<float>::Cache cache;
    const auto out = model.forward(images, &cache);
    model.backward(cache, nn::Matrix<float>::Ones(out.rows(), out.cols()));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ModelForwardBackward)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PnpRansac(benchmark::State& state) {
  const Intrinsics k{28.0, 32, 32};
  SE3Pose pose;
  pose.rotation = rodrigues(Vec3(0.2, -0.4, 0.1));
  pose.translation = Vec3(0.3, 0.1, -0.2);
  const PointMap pts = unproject_depth(DepthMap(32, 32, 2.0), k, pose, ValidMask(32, 32, 1));
  const PixelMap px = pixel_grid(32, 32);
  RansacParams params;
  params.threshold_px = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_pnp_ransac(pts, px, ValidMask(32, 32, 1), k, params));
}
BENCHMARK(BM_PnpRansac)->Unit(benchmark::kMillisecond);

void BM_FocalWeiszfeld(benchmark::State& state) {
  const Intrinsics k{28.0, 32, 32};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 4.0);
  DepthMap depth(32, 32);
  for (auto& d : depth.values()) d = u(rng);
  const PointMap pts = unproject_depth(depth, k, SE3Pose::identity(), ValidMask(32, 32, 1));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_focal_single(pts, ValidMask(32, 32, 1)));
}
BENCHMARK(BM_FocalWeiszfeld);

void BM_SynthSample(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_sample(seed++, SynthOptions{}));
}
BENCHMARK(BM_SynthSample)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
