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

#include "tinyreid/ptq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tinyreid/error.hpp"

namespace tinyreid {

void CalibrationStats::observe(size_t edge, const TensorF& t) {
  if (edge >= edges.size()) edges.resize(edge + 1);
  if (t.empty()) return;
  const auto [lo, hi] = std::minmax_element(t.values().begin(), t.values().end());
  EdgeRange& r = edges[edge];
  if (r.sample_count == 0) {
    r.min = *lo;
    r.max = *hi;
  } else {
    r.min = std::min(r.min, *lo);
    r.max = std::max(r.max, *hi);
  }
  ++r.sample_count;
}

void CalibrationStats::merge(const CalibrationStats& other) {
  if (other.edges.size() > edges.size()) edges.resize(other.edges.size());
  for (size_t i = 0; i < other.edges.size(); ++i) {
    const EdgeRange& o = other.edges[i];
    if (o.sample_count == 0) continue;
    EdgeRange& r = edges[i];
    if (r.sample_count == 0) {
      r = o;
      continue;
    }
    r.min = std::min(r.min, o.min);
    r.max = std::max(r.max, o.max);
    r.sample_count += o.sample_count;
  }
}

CalibrationStats calibrate(const ModelWeightsF32& weights, const std::vector<TensorF>& images,
                           ExecPolicy policy) {
  if (images.empty()) throw InvalidArgument("calibration needs at least one image");
  validate_weights(weights);
  const size_t edge_count = execution_graph(weights.spec).edges.size();
  CalibrationStats total;
  total.edges.resize(edge_count);
  const int n = static_cast<int>(images.size());

  // Images are independent; each runs a serial forward and the per-image
  // stats are merged, which is order-independent.
#pragma omp parallel if (policy.parallel)
  {
    CalibrationStats local;
    local.edges.resize(edge_count);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      forward_f32(weights, images[i], ExecPolicy{false, policy.wide_accumulate},
                  [&](int edge, const TensorF& t) { local.observe(static_cast<size_t>(edge), t); });
    }
#pragma omp critical
    total.merge(local);
  }
  return total;
}

QuantParams activation_qparams(float min, float max) {
  if (!(min <= max)) throw InvalidArgument("activation range must satisfy min <= max");
  const double lo = std::min(static_cast<double>(min), 0.0);
  const double hi = std::max(static_cast<double>(max), 0.0);
  const double scale = hi == lo ? 1.0 / 256.0 : (hi - lo) / 255.0;
  const int64_t zp = std::clamp<int64_t>(round_half_away(-128.0 - lo / scale), kInt8Min, kInt8Max);
  return QuantParams::per_tensor(static_cast<float>(scale), static_cast<int32_t>(zp));
}

QuantizedKernel quantize_weights_per_channel(const TensorF& kernel,
                                             std::span<const float> channel_scale) {
  if (kernel.rank() == 0) throw ShapeError("cannot quantize an empty kernel");
  const size_t cout = kernel.dims().back();
  if (!channel_scale.empty() && channel_scale.size() != cout) {
    throw ShapeError("channel scale length does not match output channels");
  }
  std::vector<double> folded(kernel.size());
  std::vector<double> max_abs(cout, 0.0);
  for (size_t i = 0; i < kernel.size(); ++i) {
    const size_t c = i % cout;
    const double s = channel_scale.empty() ? 1.0 : static_cast<double>(channel_scale[c]);
    folded[i] = static_cast<double>(kernel[i]) * s;
    if (!std::isfinite(folded[i])) throw DataError("non-finite weight");
    max_abs[c] = std::max(max_abs[c], std::abs(folded[i]));
  }
  std::vector<float> scales(cout);
  for (size_t c = 0; c < cout; ++c) {
    scales[c] = max_abs[c] > 0.0 ? static_cast<float>(max_abs[c] / 127.0) : 1.0f / 127.0f;
  }
  QuantizedKernel q{TensorI8(kernel.dims()), QuantParams::per_channel(scales)};
  for (size_t i = 0; i < kernel.size(); ++i) {
    const double v = folded[i] / static_cast<double>(scales[i % cout]);
    q.values[i] = static_cast<int8_t>(std::clamp<int64_t>(round_half_away(v), -127, 127));
  }
  return q;
}

ModelWeightsI8 quantize_model(const ModelWeightsF32& weights, const CalibrationStats& stats) {
  validate_weights(weights);
  const ExecutionGraph graph = execution_graph(weights.spec);
  const std::vector<ParamSlot> slots = param_slots(weights.spec);
  if (stats.edges.size() != graph.edges.size()) {
    throw DataError("calibration stats do not cover every activation edge");
  }

  ModelWeightsI8 model;
  model.spec = weights.spec;
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    const EdgeRange& r = stats.edges[e];
    if (r.sample_count == 0) throw DataError("no calibration data for edge " + graph.edges[e].name);
    model.act_qparams.push_back(activation_qparams(r.min, r.max));
  }

  model.layers.resize(slots.size());
  for (const OpSpec& op : graph.ops) {
    if (op.slot < 0) continue;
    const LayerWeightsF32& w = weights.layers[op.slot];
    QuantizedKernel qk = quantize_weights_per_channel(w.kernel, w.scale);
    LayerWeightsI8& out = model.layers[op.slot];
    const double s_in = model.act_qparams[op.input].scale();
    out.bias.resize(w.bias.size());
    for (size_t c = 0; c < w.bias.size(); ++c) {
      const double bias_scale = s_in * static_cast<double>(qk.qparams.scales[c]);
      out.bias[c] = static_cast<int32_t>(std::clamp<int64_t>(
          round_half_away(static_cast<double>(w.bias[c]) / bias_scale),
          std::numeric_limits<int32_t>::min(), std::numeric_limits<int32_t>::max()));
    }
    out.kernel = std::move(qk.values);
    out.weight_qparams = std::move(qk.qparams);
  }
  prepare_int8_model(model);
  return model;
}

}  // namespace tinyreid
