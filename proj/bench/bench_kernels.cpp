// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "relrot/kernels.hpp"
#include "relrot/netmodel.hpp"
#include "relrot/panosample.hpp"

namespace {

using namespace relrot;

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// A strided 3x3 encoder stage at toy scale: batch 10, 16 -> 32 channels, 32x32 input.
kernels::ConvGeometry encoder_stage(int batch) {
  kernels::ConvGeometry g;
  g.batch = batch;
  g.in_c = 16;
  g.in_h = g.in_w = 32;
  g.out_c = 32;
  g.kernel = 3;
  g.stride = 2;
  g.pad = 1;
  return g;
}

template <auto Forward>
void BM_ConvForward(benchmark::State& state) {
  const kernels::ConvGeometry g = encoder_stage(int(state.range(0)));
  const auto x = random_buffer(g.in_size(), 1), w = random_buffer(g.weight_size(), 2),
             b = random_buffer(std::size_t(g.out_c), 3);
  std::vector<double> y(g.out_size());
  for (auto _ : state) {
    Forward(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ConvForward<kernels::serial::conv2d_forward>)->Name("conv_forward/serial")->Arg(1)->Arg(10);
BENCHMARK(BM_ConvForward<kernels::omp::conv2d_forward>)->Name("conv_forward/omp")->Arg(1)->Arg(10);

template <auto Backward>
void BM_ConvBackward(benchmark::State& state) {
  const kernels::ConvGeometry g = encoder_stage(int(state.range(0)));
  const auto x = random_buffer(g.in_size(), 1), w = random_buffer(g.weight_size(), 2),
             dy = random_buffer(g.out_size(), 3);
  std::vector<double> dx(g.in_size()), dw(g.weight_size()), db(std::size_t(g.out_c));
  for (auto _ : state) {
    Backward(g, x, w, dy, dx, dw, db);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_ConvBackward<kernels::serial::conv2d_backward>)->Name("conv_backward/serial")->Arg(10);
BENCHMARK(BM_ConvBackward<kernels::omp::conv2d_backward>)->Name("conv_backward/omp")->Arg(10);

// Correlation of 16x16 feature maps with 16 channels, as at the toy decoder input.
template <auto Correlate>
void BM_Correlate(benchmark::State& state) {
  kernels::CorrGeometry g;
  g.batch = int(state.range(0));
  g.channels = 16;
  g.positions = 16 * 16;
  const auto f1 = random_buffer(g.feature_size(), 4), f2 = random_buffer(g.feature_size(), 5);
  std::vector<double> vol(g.volume_size());
  for (auto _ : state) {
    Correlate(g, f1, f2, vol);
    benchmark::DoNotOptimize(vol.data());
  }
}
BENCHMARK(BM_Correlate<kernels::serial::correlate>)->Name("correlate/serial")->Arg(10);
BENCHMARK(BM_Correlate<kernels::omp::correlate>)->Name("correlate/omp")->Arg(10);

template <auto Render>
void BM_Render(benchmark::State& state) {
  const Panorama p = synth_panorama(1, SynthStyle::Room, 1024);
  CameraSpec c;
  c.yaw = 30.0;
  c.pitch = 10.0;
  c.size = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Render(p, c));
}
BENCHMARK(BM_Render<render_perspective_serial>)->Name("render/serial")->Arg(256);
BENCHMARK(BM_Render<render_perspective>)->Name("render/omp")->Arg(256);

void BM_ToyTrainStep(benchmark::State& state) {
  RotationNet net(ModelConfig::toy());
  const int s = net.config().encoder.input_size, n = int(state.range(0));
  Tensor a(Shape{n, 3, s, s}), b(Shape{n, 3, s, s});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : a.data()) v = u(rng);
  for (double& v : b.data()) v = u(rng);
  const std::vector<RelPoseParam> gt(std::size_t(n), RelPoseParam{5.0, -5.0, 40.0});
  for (auto _ : state) {
    net.zero_grad();
    benchmark::DoNotOptimize(net.train_step(a, b, gt));
  }
}
BENCHMARK(BM_ToyTrainStep)->Name("train_step/toy")->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
