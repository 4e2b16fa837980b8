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

#include <cstdint>
#include <vector>

#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/kernels_int8.hpp"
#include "tinyreid/quant.hpp"

namespace tinyreid {

inline constexpr size_t kDefaultCalibrationCount = 100;

struct EdgeRange {
  float min = 0.0f;
  float max = 0.0f;
  uint64_t sample_count = 0;

  friend bool operator==(const EdgeRange&, const EdgeRange&) = default;
};

// Running min/max of every activation edge (input included).
struct CalibrationStats {
  std::vector<EdgeRange> edges;

  void observe(size_t edge, const TensorF& t);
  // Element-wise min/max merge; associative and commutative.
  void merge(const CalibrationStats& other);

  friend bool operator==(const CalibrationStats&, const CalibrationStats&) = default;
};

CalibrationStats calibrate(const ModelWeightsF32& weights, const std::vector<TensorF>& images,
                           ExecPolicy policy = {});

// Per-tensor asymmetric params covering [min(min, 0), max(max, 0)].
QuantParams activation_qparams(float min, float max);

struct QuantizedKernel {
  TensorI8 values;
  QuantParams qparams;  // per output channel (last axis), symmetric
};

// Symmetric per-output-channel quantization; the output channel is the last
// axis. channel_scale (folded batch norm) is multiplied in first when given.
QuantizedKernel quantize_weights_per_channel(const TensorF& kernel,
                                             std::span<const float> channel_scale = {});

// Builds the integer model: per-channel int8 weights, int32 biases at
// scale_in * scale_w, per-tensor activation params from the stats.
ModelWeightsI8 quantize_model(const ModelWeightsF32& weights, const CalibrationStats& stats);

}  // namespace tinyreid
