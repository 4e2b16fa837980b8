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

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tinyreid/arch.hpp"
#include "tinyreid/tensor.hpp"

namespace tinyreid {

struct ExecPolicy {
  bool parallel = true;
  // Accumulate dot products in double. Used when comparing against oracles.
  bool wide_accumulate = false;

  static ExecPolicy serial() { return ExecPolicy{false, false}; }
};

enum class Activation { None, Relu6 };

// Parameters of one ParamSlot. `scale` is the folded batch-norm multiplier
// (empty for the embedding FC); y = scale * (x (*) kernel) + bias.
struct LayerWeightsF32 {
  TensorF kernel;
  std::vector<float> scale;
  std::vector<float> bias;

  friend bool operator==(const LayerWeightsF32&, const LayerWeightsF32&) = default;
};

struct ModelWeightsF32 {
  ModelSpec spec;
  std::vector<LayerWeightsF32> layers;  // parallel to param_slots(spec)

  const LayerWeightsF32& by_name(const std::string& name) const;
  LayerWeightsF32& by_name(const std::string& name);
  LayerWeightsF32& embedding() { return layers.back(); }
  const LayerWeightsF32& embedding() const { return layers.back(); }

  friend bool operator==(const ModelWeightsF32&, const ModelWeightsF32&) = default;
};

// Throws ShapeError on a dims mismatch against the spec and DataError on a
// non-finite parameter.
void validate_weights(const ModelWeightsF32& weights);

// "Same" zero padding with out = ceil(in / stride); when the total padding is
// odd the extra row/column goes to the bottom/right.
int same_padding_before(int in, int out, int stride, int kernel);

// Standard convolution. kernel is KhKwCinCout; bias has Cout entries;
// channel_scale is empty or has Cout entries.
TensorF conv2d_f32(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                   int stride, std::span<const float> channel_scale = {},
                   Activation act = Activation::None, ExecPolicy policy = {});

// Per-channel 3x3 (or KxK) convolution. kernel is KhKwC.
TensorF depthwise_conv_f32(const TensorF& input, const TensorF& kernel,
                           std::span<const float> bias, int stride,
                           std::span<const float> channel_scale = {},
                           Activation act = Activation::None, ExecPolicy policy = {});

TensorF global_avg_pool_f32(const TensorF& input);
// input is 1x1xCin (or any tensor with Cin elements); kernel is CinCout.
TensorF fully_connected_f32(const TensorF& input, const TensorF& kernel,
                            std::span<const float> bias, ExecPolicy policy = {});
void add_inplace_f32(TensorF& acc, const TensorF& other);
float relu6(float x);

// Serial loop-nest implementations kept as references for the optimized
// kernels above.
namespace ref {
TensorF conv2d_f32(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                   int stride, std::span<const float> channel_scale = {},
                   Activation act = Activation::None);
TensorF depthwise_conv_f32(const TensorF& input, const TensorF& kernel,
                           std::span<const float> bias, int stride,
                           std::span<const float> channel_scale = {},
                           Activation act = Activation::None);
}  // namespace ref

// Called with (edge index, edge tensor) for every activation edge, in
// execution order, starting with the input.
using EdgeObserver = std::function<void(int, const TensorF&)>;

// Runs one op of the execution graph on FP32 edges.
void run_op_f32(const ModelWeightsF32& weights, const std::vector<ParamSlot>& slots,
                const OpSpec& op, std::vector<TensorF>& edges, ExecPolicy policy);

// Returns the L2-normalized embedding of a 64x64x3 image in [-1, 1].
std::vector<float> forward_f32(const ModelWeightsF32& weights, const TensorF& image,
                               ExecPolicy policy = {}, const EdgeObserver& observer = {});

// Pooled head features (the input of the embedding FC).
std::vector<float> head_features_f32(const ModelWeightsF32& weights, const TensorF& image,
                                     ExecPolicy policy = {});

void check_input_image(const TensorF& image);

}  // namespace tinyreid
