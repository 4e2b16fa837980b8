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

#include "tinyreid/kernels_fp32.hpp"

#include <algorithm>
#include <cmath>

#include "tinyreid/error.hpp"
#include "tinyreid/quant.hpp"

namespace tinyreid {

namespace {

void check_activation(const TensorF& t, const char* what) {
  if (t.rank() != 3) throw ShapeError(std::string(what) + ": expected an HWC tensor");
}

void check_channel_vectors(std::span<const float> bias, std::span<const float> scale,
                           size_t channels) {
  if (bias.size() != channels) throw ShapeError("bias length does not match output channels");
  if (!scale.empty() && scale.size() != channels) {
    throw ShapeError("channel scale length does not match output channels");
  }
}

inline float epilogue(double acc, size_t c, std::span<const float> bias,
                      std::span<const float> scale, Activation act) {
  double v = acc;
  if (!scale.empty()) v *= scale[c];
  v += bias[c];
  const auto f = static_cast<float>(v);
  return act == Activation::Relu6 ? relu6(f) : f;
}

inline float epilogue(float acc, size_t c, std::span<const float> bias,
                      std::span<const float> scale, Activation act) {
  float v = acc;
  if (!scale.empty()) v *= scale[c];
  v += bias[c];
  return act == Activation::Relu6 ? relu6(v) : v;
}

template <typename Acc>
void conv_rows(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
               int stride, std::span<const float> scale, Activation act, TensorF& out,
               bool parallel) {
  const int in_h = static_cast<int>(input.dim(0));
  const int in_w = static_cast<int>(input.dim(1));
  const int cin = static_cast<int>(input.dim(2));
  const int k = static_cast<int>(kernel.dim(0));
  const int cout = static_cast<int>(kernel.dim(3));
  const int out_h = static_cast<int>(out.dim(0));
  const int out_w = static_cast<int>(out.dim(1));
  const int pad_y = same_padding_before(in_h, out_h, stride, k);
  const int pad_x = same_padding_before(in_w, out_w, stride, k);
  const float* in = input.data().data();
  const float* w = kernel.data().data();
  float* o = out.data().data();

#pragma omp parallel for schedule(static) if (parallel)
  for (int oy = 0; oy < out_h; ++oy) {
    std::vector<Acc> acc(static_cast<size_t>(cout));
    for (int ox = 0; ox < out_w; ++ox) {
      std::fill(acc.begin(), acc.end(), Acc{0});
      const int y0 = oy * stride - pad_y;
      const int x0 = ox * stride - pad_x;
      const int ky_lo = std::max(0, -y0), ky_hi = std::min(k, in_h - y0);
      const int kx_lo = std::max(0, -x0), kx_hi = std::min(k, in_w - x0);
      for (int ky = ky_lo; ky < ky_hi; ++ky) {
        for (int kx = kx_lo; kx < kx_hi; ++kx) {
          const float* px = in + (static_cast<size_t>(y0 + ky) * in_w + (x0 + kx)) * cin;
          const float* wk = w + static_cast<size_t>(ky * k + kx) * cin * cout;
          for (int ci = 0; ci < cin; ++ci) {
            const Acc xv = px[ci];
            const float* wrow = wk + static_cast<size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) acc[co] += xv * static_cast<Acc>(wrow[co]);
          }
        }
      }
      float* dst = o + (static_cast<size_t>(oy) * out_w + ox) * cout;
      for (int co = 0; co < cout; ++co) dst[co] = epilogue(acc[co], co, bias, scale, act);
    }
  }
}

template <typename Acc>
void depthwise_rows(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                    int stride, std::span<const float> scale, Activation act, TensorF& out,
                    bool parallel) {
  const int in_h = static_cast<int>(input.dim(0));
  const int in_w = static_cast<int>(input.dim(1));
  const int ch = static_cast<int>(input.dim(2));
  const int k = static_cast<int>(kernel.dim(0));
  const int out_h = static_cast<int>(out.dim(0));
  const int out_w = static_cast<int>(out.dim(1));
  const int pad_y = same_padding_before(in_h, out_h, stride, k);
  const int pad_x = same_padding_before(in_w, out_w, stride, k);
  const float* in = input.data().data();
  const float* w = kernel.data().data();
  float* o = out.data().data();

#pragma omp parallel for schedule(static) if (parallel)
  for (int oy = 0; oy < out_h; ++oy) {
    std::vector<Acc> acc(static_cast<size_t>(ch));
    for (int ox = 0; ox < out_w; ++ox) {
      std::fill(acc.begin(), acc.end(), Acc{0});
      const int y0 = oy * stride - pad_y;
      const int x0 = ox * stride - pad_x;
      const int ky_lo = std::max(0, -y0), ky_hi = std::min(k, in_h - y0);
      const int kx_lo = std::max(0, -x0), kx_hi = std::min(k, in_w - x0);
      for (int ky = ky_lo; ky < ky_hi; ++ky) {
        for (int kx = kx_lo; kx < kx_hi; ++kx) {
          const float* px = in + (static_cast<size_t>(y0 + ky) * in_w + (x0 + kx)) * ch;
          const float* wk = w + static_cast<size_t>(ky * k + kx) * ch;
          for (int c = 0; c < ch; ++c) acc[c] += static_cast<Acc>(px[c]) * wk[c];
        }
      }
      float* dst = o + (static_cast<size_t>(oy) * out_w + ox) * ch;
      for (int c = 0; c < ch; ++c) dst[c] = epilogue(acc[c], c, bias, scale, act);
    }
  }
}

TensorF make_output(const TensorF& input, int stride, size_t channels) {
  const size_t h = (input.dim(0) + stride - 1) / stride;
  const size_t w = (input.dim(1) + stride - 1) / stride;
  return TensorF({h, w, channels});
}

void check_stride(int stride) {
  if (stride != 1 && stride != 2) throw ShapeError("stride must be 1 or 2");
}

void check_conv(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                std::span<const float> scale, int stride) {
  check_activation(input, "conv2d");
  check_stride(stride);
  if (kernel.rank() != 4 || kernel.dim(0) != kernel.dim(1)) {
    throw ShapeError("conv2d: kernel must be KxKxCinxCout");
  }
  if (kernel.dim(2) != input.dim(2)) {
    throw ShapeError("conv2d: kernel Cin " + std::to_string(kernel.dim(2)) +
                     " does not match input channels " + std::to_string(input.dim(2)));
  }
  check_channel_vectors(bias, scale, kernel.dim(3));
}

void check_depthwise(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                     std::span<const float> scale, int stride) {
  check_activation(input, "depthwise_conv");
  check_stride(stride);
  if (kernel.rank() != 3 || kernel.dim(0) != kernel.dim(1)) {
    throw ShapeError("depthwise_conv: kernel must be KxKxC");
  }
  if (kernel.dim(2) != input.dim(2)) {
    throw ShapeError("depthwise_conv: kernel channels do not match input channels");
  }
  check_channel_vectors(bias, scale, kernel.dim(2));
}

}  // namespace

float relu6(float x) { return std::min(std::max(x, 0.0f), 6.0f); }

int same_padding_before(int in, int out, int stride, int kernel) {
  const int total = std::max((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

TensorF conv2d_f32(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                   int stride, std::span<const float> channel_scale, Activation act,
                   ExecPolicy policy) {
  check_conv(input, kernel, bias, channel_scale, stride);
  TensorF out = make_output(input, stride, kernel.dim(3));
  if (policy.wide_accumulate) {
    conv_rows<double>(input, kernel, bias, stride, channel_scale, act, out, policy.parallel);
  } else {
    conv_rows<float>(input, kernel, bias, stride, channel_scale, act, out, policy.parallel);
  }
  return out;
}

TensorF depthwise_conv_f32(const TensorF& input, const TensorF& kernel,
                           std::span<const float> bias, int stride,
                           std::span<const float> channel_scale, Activation act,
                           ExecPolicy policy) {
  check_depthwise(input, kernel, bias, channel_scale, stride);
  TensorF out = make_output(input, stride, kernel.dim(2));
  if (policy.wide_accumulate) {
    depthwise_rows<double>(input, kernel, bias, stride, channel_scale, act, out, policy.parallel);
  } else {
    depthwise_rows<float>(input, kernel, bias, stride, channel_scale, act, out, policy.parallel);
  }
  return out;
}

TensorF global_avg_pool_f32(const TensorF& input) {
  check_activation(input, "global_avg_pool");
  const size_t hw = input.dim(0) * input.dim(1);
  const size_t ch = input.dim(2);
  std::vector<double> sum(ch, 0.0);
  for (size_t p = 0; p < hw; ++p) {
    for (size_t c = 0; c < ch; ++c) sum[c] += input[p * ch + c];
  }
  TensorF out({1, 1, ch});
  for (size_t c = 0; c < ch; ++c) out[c] = static_cast<float>(sum[c] / static_cast<double>(hw));
  return out;
}

TensorF fully_connected_f32(const TensorF& input, const TensorF& kernel,
                            std::span<const float> bias, ExecPolicy policy) {
  if (kernel.rank() != 2 || kernel.dim(0) != input.size()) {
    throw ShapeError("fully_connected: kernel rows do not match input length");
  }
  const size_t cin = kernel.dim(0);
  const int cout = static_cast<int>(kernel.dim(1));
  if (bias.size() != static_cast<size_t>(cout)) throw ShapeError("fully_connected: bias length");
  TensorF out({1, 1, static_cast<size_t>(cout)});
#pragma omp parallel for schedule(static) if (policy.parallel)
  for (int j = 0; j < cout; ++j) {
    if (policy.wide_accumulate) {
      double acc = 0.0;
      for (size_t i = 0; i < cin; ++i) acc += static_cast<double>(input[i]) * kernel[i * cout + j];
      out[j] = static_cast<float>(acc + bias[j]);
    } else {
      float acc = 0.0f;
      for (size_t i = 0; i < cin; ++i) acc += input[i] * kernel[i * cout + j];
      out[j] = acc + bias[j];
    }
  }
  return out;
}

void add_inplace_f32(TensorF& acc, const TensorF& other) {
  if (acc.dims() != other.dims()) throw ShapeError("residual add: operand shapes differ");
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
}

namespace ref {

TensorF conv2d_f32(const TensorF& input, const TensorF& kernel, std::span<const float> bias,
                   int stride, std::span<const float> channel_scale, Activation act) {
  check_conv(input, kernel, bias, channel_scale, stride);
  TensorF out = make_output(input, stride, kernel.dim(3));
  const int in_h = static_cast<int>(input.dim(0)), in_w = static_cast<int>(input.dim(1));
  const int k = static_cast<int>(kernel.dim(0));
  const size_t cin = kernel.dim(2), cout = kernel.dim(3);
  const int pad_y = same_padding_before(in_h, static_cast<int>(out.dim(0)), stride, k);
  const int pad_x = same_padding_before(in_w, static_cast<int>(out.dim(1)), stride, k);
  for (size_t oy = 0; oy < out.dim(0); ++oy) {
    for (size_t ox = 0; ox < out.dim(1); ++ox) {
      for (size_t co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = static_cast<int>(oy) * stride - pad_y + ky;
            const int ix = static_cast<int>(ox) * stride - pad_x + kx;
            if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
            for (size_t ci = 0; ci < cin; ++ci) {
              acc += static_cast<double>(input.at(iy, ix, ci)) *
                     kernel[((static_cast<size_t>(ky) * k + kx) * cin + ci) * cout + co];
            }
          }
        }
        out.at(oy, ox, co) = epilogue(acc, co, bias, channel_scale, act);
      }
    }
  }
  return out;
}

TensorF depthwise_conv_f32(const TensorF& input, const TensorF& kernel,
                           std::span<const float> bias, int stride,
                           std::span<const float> channel_scale, Activation act) {
  check_depthwise(input, kernel, bias, channel_scale, stride);
  TensorF out = make_output(input, stride, kernel.dim(2));
  const int in_h = static_cast<int>(input.dim(0)), in_w = static_cast<int>(input.dim(1));
  const int k = static_cast<int>(kernel.dim(0));
  const size_t ch = kernel.dim(2);
  const int pad_y = same_padding_before(in_h, static_cast<int>(out.dim(0)), stride, k);
  const int pad_x = same_padding_before(in_w, static_cast<int>(out.dim(1)), stride, k);
  for (size_t oy = 0; oy < out.dim(0); ++oy) {
    for (size_t ox = 0; ox < out.dim(1); ++ox) {
      for (size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = static_cast<int>(oy) * stride - pad_y + ky;
            const int ix = static_cast<int>(ox) * stride - pad_x + kx;
            if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
            acc += static_cast<double>(input.at(iy, ix, c)) *
                   kernel[(static_cast<size_t>(ky) * k + kx) * ch + c];
          }
        }
        out.at(oy, ox, c) = epilogue(acc, c, bias, channel_scale, act);
      }
    }
  }
  return out;
}

}  // namespace ref

// ---------------------------------------------------------------------------

const LayerWeightsF32& ModelWeightsF32::by_name(const std::string& name) const {
  const std::vector<ParamSlot> slots = param_slots(spec);
  for (size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name == name) return layers.at(i);
  }
  throw InvalidArgument("no parameter slot named " + name);
}

LayerWeightsF32& ModelWeightsF32::by_name(const std::string& name) {
  return const_cast<LayerWeightsF32&>(std::as_const(*this).by_name(name));
}

void validate_weights(const ModelWeightsF32& weights) {
  const std::vector<ParamSlot> slots = param_slots(weights.spec);
  if (slots.size() != weights.layers.size()) {
    throw ShapeError("weight entries do not match the spec's parameterized layers");
  }
  for (size_t i = 0; i < slots.size(); ++i) {
    const LayerWeightsF32& w = weights.layers[i];
    if (w.kernel.dims() != slots[i].kernel_dims()) {
      throw ShapeError("kernel dims mismatch for " + slots[i].name);
    }
    const size_t scale_len = slots[i].has_channel_scale ? static_cast<size_t>(slots[i].cout) : 0;
    if (w.bias.size() != static_cast<size_t>(slots[i].cout) || w.scale.size() != scale_len) {
      throw ShapeError("channel vector length mismatch for " + slots[i].name);
    }
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(w.kernel.values().begin(), w.kernel.values().end(), finite) ||
        !std::all_of(w.scale.begin(), w.scale.end(), finite) ||
        !std::all_of(w.bias.begin(), w.bias.end(), finite)) {
      throw DataError("non-finite parameter in " + slots[i].name);
    }
  }
}

void check_input_image(const TensorF& image) {
  if (image.rank() != 3 || image.dim(0) != kInputSize || image.dim(1) != kInputSize ||
      image.dim(2) != kInputChannels) {
    throw ShapeError("input image must be 64x64x3");
  }
}

void run_op_f32(const ModelWeightsF32& weights, const std::vector<ParamSlot>& slots,
                const OpSpec& op, std::vector<TensorF>& edges, ExecPolicy policy) {
  const TensorF& in = edges[op.input];
  switch (op.kind) {
    case OpKind::Conv: {
      const ParamSlot& s = slots[op.slot];
      const LayerWeightsF32& w = weights.layers[op.slot];
      edges[op.output] = conv2d_f32(in, w.kernel, w.bias, s.stride, w.scale,
                                    s.relu6 ? Activation::Relu6 : Activation::None, policy);
      break;
    }
    case OpKind::Depthwise: {
      const ParamSlot& s = slots[op.slot];
      const LayerWeightsF32& w = weights.layers[op.slot];
      edges[op.output] = depthwise_conv_f32(in, w.kernel, w.bias, s.stride, w.scale,
                                            s.relu6 ? Activation::Relu6 : Activation::None,
                                            policy);
      break;
    }
    case OpKind::Add: {
      TensorF sum = edges[op.input2];
      add_inplace_f32(sum, in);
      edges[op.output] = std::move(sum);
      break;
    }
    case OpKind::AvgPool:
      edges[op.output] = global_avg_pool_f32(in);
      break;
    case OpKind::FullyConnected: {
      const LayerWeightsF32& w = weights.layers[op.slot];
      edges[op.output] = fully_connected_f32(in, w.kernel, w.bias, policy);
      break;
    }
  }
}

namespace {

struct GraphRun {
  ExecutionGraph graph;
  std::vector<TensorF> edges;
};

GraphRun run_graph_f32(const ModelWeightsF32& weights, const TensorF& image, ExecPolicy policy,
                       const EdgeObserver& observer, bool stop_at_features) {
  check_input_image(image);
  validate_weights(weights);
  GraphRun run{execution_graph(weights.spec), {}};
  const std::vector<ParamSlot> slots = param_slots(weights.spec);
  run.edges.resize(run.graph.edges.size());
  run.edges[0] = image;
  if (observer) observer(0, run.edges[0]);
  for (const OpSpec& op : run.graph.ops) {
    run_op_f32(weights, slots, op, run.edges, policy);
    if (observer) observer(op.output, run.edges[op.output]);
    if (stop_at_features && op.output == run.graph.feature_edge) break;
  }
  return run;
}

}  // namespace

std::vector<float> forward_f32(const ModelWeightsF32& weights, const TensorF& image,
                               ExecPolicy policy, const EdgeObserver& observer) {
  const GraphRun run = run_graph_f32(weights, image, policy, observer, false);
  return l2_normalize(run.edges[run.graph.embedding_edge].data());
}

std::vector<float> head_features_f32(const ModelWeightsF32& weights, const TensorF& image,
                                     ExecPolicy policy) {
  GraphRun run = run_graph_f32(weights, image, policy, {}, true);
  return std::move(run.edges[run.graph.feature_edge].values());
}

}  // namespace tinyreid
