/*
 * Copyright 2026 The TinyReID Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>

#include "tinyreid/arch.hpp"
#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/kernels_int8.hpp"
#include "tinyreid/ptq.hpp"
#include "tinyreid/random_model.hpp"

using namespace tinyreid;

namespace {

TensorF random_tensor(std::vector<size_t> dims, uint64_t seed) {
  TensorF t(std::move(dims));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : t.values()) v = u(rng);
  return t;
}

ExecPolicy policy_for(const benchmark::State& state) {
  return state.range(0) ? ExecPolicy{} : ExecPolicy::serial();
}

// 1x1 expand conv on a 16x16x32 activation, the typical hot layer.
void BM_Conv1x1F32(benchmark::State& state) {
  const TensorF x = random_tensor({16, 16, 32}, 1), k = random_tensor({1, 1, 32, 96}, 2);
  const std::vector<float> bias(96, 0.1f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_f32(x, k, bias, 1, {}, Activation::Relu6, policy_for(state)));
  }
}
BENCHMARK(BM_Conv1x1F32)->Arg(0)->Arg(1);

void BM_RefConv1x1F32(benchmark::State& state) {
  const TensorF x = random_tensor({16, 16, 32}, 1), k = random_tensor({1, 1, 32, 96}, 2);
  const std::vector<float> bias(96, 0.1f);
  for (auto _ : state) benchmark::DoNotOptimize(ref::conv2d_f32(x, k, bias, 1, {}, Activation::Relu6));
}
BENCHMARK(BM_RefConv1x1F32);

void BM_DepthwiseF32(benchmark::State& state) {
  const TensorF x = random_tensor({32, 32, 48}, 3), k = random_tensor({3, 3, 48}, 4);
  const std::vector<float> bias(48, 0.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(depthwise_conv_f32(x, k, bias, 1, {}, Activation::Relu6, policy_for(state)));
  }
}
BENCHMARK(BM_DepthwiseF32)->Arg(0)->Arg(1);

void BM_RefDepthwiseF32(benchmark::State& state) {
  const TensorF x = random_tensor({32, 32, 48}, 3), k = random_tensor({3, 3, 48}, 4);
  const std::vector<float> bias(48, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(ref::depthwise_conv_f32(x, k, bias, 1, {}, Activation::Relu6));
}
BENCHMARK(BM_RefDepthwiseF32);

struct Models {
  ModelWeightsF32 f32;
  ModelWeightsI8 i8;
  TensorF image;
};

const Models& models() {
  static const Models m = [] {
    Models out{generate_random_model(build_spec(0.35, 7, 128), 9), {}, random_tensor({64, 64, 3}, 10)};
    out.i8 = quantize_model(out.f32, calibrate(out.f32, {out.image}));
    return out;
  }();
  return m;
}

void BM_ForwardF32(benchmark::State& state) {
  const Models& m = models();
  for (auto _ : state) benchmark::DoNotOptimize(forward_f32(m.f32, m.image, policy_for(state)));
}
BENCHMARK(BM_ForwardF32)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForwardI8(benchmark::State& state) {
  const Models& m = models();
  const TensorI8 q = quantize_image(m.image, m.i8.input_qparams());
  for (auto _ : state) benchmark::DoNotOptimize(forward_i8(m.i8, q, policy_for(state)).values);
}
BENCHMARK(BM_ForwardI8)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Conv1x1I8(benchmark::State& state) {
  const Models& m = models();
  const auto slots = param_slots(m.i8.spec);
  size_t idx = 0;
  while (slots[idx].name != "block1.expand") ++idx;
  const ExecutionGraph g = execution_graph(m.i8.spec);
  const TensorI8 x({static_cast<size_t>(g.edges[1].shape.h), static_cast<size_t>(g.edges[1].shape.w),
                    static_cast<size_t>(slots[idx].cin)},
                   static_cast<int8_t>(3));
  const QuantParams qp = QuantParams::per_tensor(0.05f, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d_i8(x, qp, m.i8.layers[idx], qp, 1, ActRange{}, policy_for(state)));
  }
}
BENCHMARK(BM_Conv1x1I8)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
