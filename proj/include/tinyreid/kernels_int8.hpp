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
#include <vector>

#include "tinyreid/arch.hpp"
#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/quant.hpp"
#include "tinyreid/tensor.hpp"

namespace tinyreid {

// One quantized ParamSlot: symmetric per-channel int8 weights (batch-norm
// scale already folded in) and int32 biases at scale_in * scale_w[c].
struct LayerWeightsI8 {
  TensorI8 kernel;
  QuantParams weight_qparams;
  std::vector<int32_t> bias;
  // Derived from the scales by prepare_int8_model.
  std::vector<FixedPointMultiplier> requant;

  friend bool operator==(const LayerWeightsI8&, const LayerWeightsI8&) = default;
};

// Rescale factors of a residual add: both operands are brought to the output
// edge scale before the saturating add.
struct AddRescale {
  FixedPointMultiplier skip;    // block input
  FixedPointMultiplier branch;  // projection output

  friend bool operator==(const AddRescale&, const AddRescale&) = default;
};

inline constexpr int kResidualShift = 20;

// Output clamp of a quantized op; ReLU6 is fused as the quantized image of
// [0, 6], a linear op keeps the full int8 range.
struct ActRange {
  int32_t lo = kInt8Min;
  int32_t hi = kInt8Max;

  friend bool operator==(const ActRange&, const ActRange&) = default;
};

struct ModelWeightsI8 {
  ModelSpec spec;
  std::vector<QuantParams> act_qparams;  // one per execution-graph edge
  std::vector<LayerWeightsI8> layers;    // parallel to param_slots(spec)

  // Derived state, rebuilt by prepare_int8_model.
  std::vector<AddRescale> add_rescale;             // per op; meaningful for Add ops
  std::vector<FixedPointMultiplier> pool_rescale;  // per op; meaningful for AvgPool ops
  std::vector<ActRange> act_range;                 // per op

  const QuantParams& input_qparams() const { return act_qparams.front(); }
  const QuantParams& output_qparams() const;

  friend bool operator==(const ModelWeightsI8&, const ModelWeightsI8&) = default;
};

// Checks the model invariants and recomputes every fixed-point multiplier
// from the stored scales.
void prepare_int8_model(ModelWeightsI8& model);

ActRange activation_range(Activation act, const QuantParams& out);

TensorI8 conv2d_i8(const TensorI8& input, const QuantParams& in_qp, const LayerWeightsI8& w,
                   const QuantParams& out_qp, int stride, ActRange range,
                   ExecPolicy policy = {});
TensorI8 depthwise_conv_i8(const TensorI8& input, const QuantParams& in_qp,
                           const LayerWeightsI8& w, const QuantParams& out_qp, int stride,
                           ActRange range, ExecPolicy policy = {});
TensorI8 fully_connected_i8(const TensorI8& input, const QuantParams& in_qp,
                            const LayerWeightsI8& w, const QuantParams& out_qp);
TensorI8 global_avg_pool_i8(const TensorI8& input, const QuantParams& in_qp,
                            FixedPointMultiplier rescale, const QuantParams& out_qp);
// branch <- saturate(branch' + skip'), both operands rescaled to out_qp.
// branch holds the projection output on entry and the block output on return.
void add_inplace_i8(TensorI8& branch, const QuantParams& branch_qp, const TensorI8& skip,
                    const QuantParams& skip_qp, const AddRescale& rescale,
                    const QuantParams& out_qp);

namespace ref {
TensorI8 conv2d_i8(const TensorI8& input, const QuantParams& in_qp, const LayerWeightsI8& w,
                   const QuantParams& out_qp, int stride, ActRange range);
TensorI8 depthwise_conv_i8(const TensorI8& input, const QuantParams& in_qp,
                           const LayerWeightsI8& w, const QuantParams& out_qp, int stride,
                           ActRange range);
}  // namespace ref

using EdgeObserverI8 = std::function<void(int, const TensorI8&)>;

void run_op_i8(const ModelWeightsI8& model, const std::vector<ParamSlot>& slots, size_t op_index,
               const OpSpec& op, std::vector<TensorI8>& edges, ExecPolicy policy);

struct QuantizedEmbedding {
  std::vector<int8_t> values;
  QuantParams qparams;
};

// Integer-only forward pass up to the embedding FC. image_q must already be
// quantized with model.input_qparams().
QuantizedEmbedding forward_i8(const ModelWeightsI8& model, const TensorI8& image_q,
                              ExecPolicy policy = {}, const EdgeObserverI8& observer = {});

TensorI8 quantize_image(const TensorF& image, const QuantParams& qp);

// Element-wise dequantization followed by L2 normalization.
std::vector<float> dequantize_embedding(std::span<const int8_t> embedding_q,
                                        const QuantParams& qp);

}  // namespace tinyreid
