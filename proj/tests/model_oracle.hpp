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

// Whole-network oracles: the FP32 forward composed layer by layer from the
// architecture description, and a fake-quant check for each INT8 op.

#pragma once

#include <string>
#include <vector>

#include "oracles.hpp"
#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/kernels_int8.hpp"

namespace oracle {

inline DTensor conv_layer(const DTensor& x, const tinyreid::LayerWeightsF32& w, int stride, bool act) {
  const int k = static_cast<int>(w.kernel.dim(0));
  return conv(x, to_double(w.kernel.values()), k, w.kernel.dim(3), to_double(w.bias), stride,
              to_double(w.scale), act);
}

inline DTensor dw_layer(const DTensor& x, const tinyreid::LayerWeightsF32& w, int stride, bool act) {
  return depthwise(x, to_double(w.kernel.values()), static_cast<int>(w.kernel.dim(0)),
                   to_double(w.bias), stride, to_double(w.scale), act);
}

// Stem (ReLU6) -> bottlenecks (expand ReLU6, depthwise ReLU6, linear
// project, optional skip) -> head (ReLU6) -> mean -> FC -> normalize.
inline std::vector<double> forward(const tinyreid::ModelWeightsF32& m, const tinyreid::TensorF& image,
                                   std::vector<double>* pooled = nullptr,
                                   std::vector<double>* pre_norm = nullptr) {
  using tinyreid::LayerKind;
  DTensor x = from_float(image);
  std::vector<double> vec;
  for (size_t i = 0; i < m.spec.layers.size(); ++i) {
    const tinyreid::LayerSpec& l = m.spec.layers[i];
    switch (l.kind) {
      case LayerKind::Stem:
        x = conv_layer(x, m.by_name("stem"), l.stride, true);
        break;
      case LayerKind::Bottleneck: {
        const std::string p = "block" + std::to_string(i - 1);
        DTensor y = x;
        if (l.expansion > 1) y = conv_layer(y, m.by_name(p + ".expand"), 1, true);
        y = dw_layer(y, m.by_name(p + ".depthwise"), l.stride, true);
        y = conv_layer(y, m.by_name(p + ".project"), 1, false);
        if (l.has_residual) {
          for (size_t e = 0; e < y.v.size(); ++e) y.v[e] += x.v[e];
        }
        x = std::move(y);
        break;
      }
      case LayerKind::HeadConv:
        x = conv_layer(x, m.by_name("head"), 1, true);
        break;
      case LayerKind::GlobalAvgPool:
        vec = avg_pool(x);
        if (pooled) *pooled = vec;
        break;
      case LayerKind::EmbeddingFC: {
        const auto& fc = m.by_name("embedding");
        vec = dense(vec, to_double(fc.kernel.values()), fc.kernel.dim(1), to_double(fc.bias));
        if (pre_norm) *pre_norm = vec;
        break;
      }
      case LayerKind::L2Norm:
        vec = normalize(vec);
        break;
    }
  }
  return vec;
}

// Fake-quant reference output of graph op k, computed from the int8 input
// edges the integer forward produced.
inline std::vector<int32_t> int8_op(const tinyreid::ModelWeightsI8& m,
                                    const std::vector<tinyreid::ParamSlot>& slots,
                                    const tinyreid::OpSpec& op,
                                    const std::vector<tinyreid::TensorI8>& edges) {
  using tinyreid::OpKind;
  const QuantParams& in_qp = m.act_qparams[op.input];
  const QuantParams& out_qp = m.act_qparams[op.output];
  const DTensor x = dequantize(edges[op.input], in_qp);
  switch (op.kind) {
    case OpKind::Conv:
    case OpKind::Depthwise: {
      const auto& w = m.layers[op.slot];
      const auto& slot = slots[op.slot];
      const auto kernel = dequantize_kernel(w.kernel, w.weight_qparams.scales);
      const auto bias = dequantize_bias(w.bias, in_qp.scale(), w.weight_qparams.scales);
      const DTensor y = op.kind == OpKind::Conv
                            ? conv(x, kernel, slot.kernel, w.kernel.dim(3), bias, slot.stride, {}, slot.relu6)
                            : depthwise(x, kernel, slot.kernel, bias, slot.stride, {}, slot.relu6);
      return quantize_all(y, out_qp);
    }
    case OpKind::Add: {
      DTensor y = dequantize(edges[op.input2], m.act_qparams[op.input2]);
      for (size_t e = 0; e < y.v.size(); ++e) y.v[e] += x.v[e];
      return quantize_all(y, out_qp);
    }
    case OpKind::AvgPool: {
      DTensor y(1, 1, x.c);
      y.v = avg_pool(x);
      return quantize_all(y, out_qp);
    }
    case OpKind::FullyConnected: {
      const auto& w = m.layers[op.slot];
      DTensor y(1, 1, w.kernel.dim(1));
      y.v = dense(x.v, dequantize_kernel(w.kernel, w.weight_qparams.scales), w.kernel.dim(1),
                  dequantize_bias(w.bias, in_qp.scale(), w.weight_qparams.scales));
      return quantize_all(y, out_qp);
    }
  }
  return {};
}

}  // namespace oracle
