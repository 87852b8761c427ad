#include <benchmark/benchmark.h>

#include <random>

#include "lane/affinity.hpp"
#include "lane/enet.hpp"
#include "lane/kernels.hpp"
#include "lane/synthlab.hpp"

namespace {

lane::TensorF32 filled(const lane::Dims& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  lane::TensorF32 t(d);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// 3x3 conv at the resolution of the dilated stage, one thread per run.
void BM_Conv3x3(benchmark::State& state) {
  const auto c = std::size_t(state.range(0));
  auto in = filled({1, c, 44, 80}, 1);
  lane::ConvParams p;
  p.kernel = filled({c, c, 3, 3}, 2);
  p.dilation = {int(state.range(1)), int(state.range(1))};
  p.padding = p.dilation;
  for (auto _ : state) benchmark::DoNotOptimize(lane::conv2d(in, p));
  state.SetItemsProcessed(state.iterations() * std::int64_t(c * c * 9 * 44 * 80));
}
BENCHMARK(BM_Conv3x3)->Args({32, 1})->Args({32, 8})->Unit(benchmark::kMillisecond);

void BM_TransposedConv(benchmark::State& state) {
  auto in = filled({1, 16, 44, 80}, 3);
  lane::ConvParams p;
  p.kernel = filled({16, 16, 3, 3}, 4);
  p.stride = {2, 2};
  p.padding = {1, 1};
  p.output_padding = {1, 1};
  for (auto _ : state) benchmark::DoNotOptimize(lane::transposed_conv2d(in, p));
}
BENCHMARK(BM_TransposedConv)->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& state) {
  const auto scene = lane::sample_scene(42);
  for (auto _ : state) benchmark::DoNotOptimize(lane::round_trip(scene.mask));
}
BENCHMARK(BM_EncodeDecode)->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  const auto spec = lane::build_enet21();
  const auto w = lane::random_weights(spec, 1);
  const auto h = std::size_t(state.range(0)), wd = std::size_t(state.range(1));
  auto img = filled({1, 3, h, wd}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(lane::forward(spec, w, img));
}
BENCHMARK(BM_Forward)->Args({64, 96})->Args({352, 640})->Unit(benchmark::kMillisecond);

void BM_CountFlops(benchmark::State& state) {
  const auto spec = lane::build_enet21();
  for (auto _ : state) benchmark::DoNotOptimize(lane::analyze(spec, {3, 352, 640}));
}
BENCHMARK(BM_CountFlops);

}  // namespace

BENCHMARK_MAIN();
