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

#include "tinyreid/kernels_int8.hpp"

#include <algorithm>

#include "tinyreid/error.hpp"

namespace tinyreid {

namespace {

void check_i8_conv(const TensorI8& input, const LayerWeightsI8& w, int stride, bool depthwise) {
  if (input.rank() != 3) throw ShapeError("int8 conv: expected an HWC tensor");
  if (stride != 1 && stride != 2) throw ShapeError("int8 conv: stride must be 1 or 2");
  const size_t rank = depthwise ? 3 : 4;
  if (w.kernel.rank() != rank || w.kernel.dim(2) != input.dim(2)) {
    throw ShapeError("int8 conv: kernel does not match input channels");
  }
  const size_t cout = depthwise ? w.kernel.dim(2) : w.kernel.dim(3);
  if (w.bias.size() != cout || w.requant.size() != cout) {
    throw ShapeError("int8 conv: bias/requant length does not match output channels");
  }
}

TensorI8 make_output(const TensorI8& input, int stride, size_t channels) {
  const size_t h = (input.dim(0) + stride - 1) / stride;
  const size_t w = (input.dim(1) + stride - 1) / stride;
  return TensorI8({h, w, channels});
}

}  // namespace

ActRange activation_range(Activation act, const QuantParams& out) {
  if (act == Activation::None) return ActRange{};
  return ActRange{std::max(out.zero_point, kInt8Min),
                  static_cast<int32_t>(quantize_affine(6.0f, out))};
}

TensorI8 conv2d_i8(const TensorI8& input, const QuantParams& in_qp, const LayerWeightsI8& w,
                   const QuantParams& out_qp, int stride, ActRange range, ExecPolicy policy) {
  check_i8_conv(input, w, stride, false);
  TensorI8 out = make_output(input, stride, w.kernel.dim(3));
  const int in_h = static_cast<int>(input.dim(0));
  const int in_w = static_cast<int>(input.dim(1));
  const int cin = static_cast<int>(input.dim(2));
  const int k = static_cast<int>(w.kernel.dim(0));
  const int cout = static_cast<int>(w.kernel.dim(3));
  const int out_h = static_cast<int>(out.dim(0));
  const int out_w = static_cast<int>(out.dim(1));
  const int pad_y = same_padding_before(in_h, out_h, stride, k);
  const int pad_x = same_padding_before(in_w, out_w, stride, k);
  const int32_t in_zp = in_qp.zero_point;
  const int32_t out_zp = out_qp.zero_point;
  const int8_t* in = input.data().data();
  const int8_t* wt = w.kernel.data().data();
  int8_t* o = out.data().data();

#pragma omp parallel for schedule(static) if (policy.parallel)
  for (int oy = 0; oy < out_h; ++oy) {
    std::vector<int32_t> acc(static_cast<size_t>(cout));
    for (int ox = 0; ox < out_w; ++ox) {
      std::copy(w.bias.begin(), w.bias.end(), acc.begin());
      const int y0 = oy * stride - pad_y;
      const int x0 = ox * stride - pad_x;
      const int ky_lo = std::max(0, -y0), ky_hi = std::min(k, in_h - y0);
      const int kx_lo = std::max(0, -x0), kx_hi = std::min(k, in_w - x0);
      for (int ky = ky_lo; ky < ky_hi; ++ky) {
        for (int kx = kx_lo; kx < kx_hi; ++kx) {
          const int8_t* px = in + (static_cast<size_t>(y0 + ky) * in_w + (x0 + kx)) * cin;
          const int8_t* wk = wt + static_cast<size_t>(ky * k + kx) * cin * cout;
          for (int ci = 0; ci < cin; ++ci) {
            const int32_t xv = static_cast<int32_t>(px[ci]) - in_zp;
            const int8_t* wrow = wk + static_cast<size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) acc[co] += xv * wrow[co];
          }
        }
      }
      int8_t* dst = o + (static_cast<size_t>(oy) * out_w + ox) * cout;
      for (int co = 0; co < cout; ++co) {
        dst[co] = requantize_clamped(acc[co], w.requant[co], out_zp, range.lo, range.hi);
      }
    }
  }
  return out;
}

TensorI8 depthwise_conv_i8(const TensorI8& input, const QuantParams& in_qp,
                           const LayerWeightsI8& w, const QuantParams& out_qp, int stride,
                           ActRange range, ExecPolicy policy) {
  check_i8_conv(input, w, stride, true);
  TensorI8 out = make_output(input, stride, w.kernel.dim(2));
  const int in_h = static_cast<int>(input.dim(0));
  const int in_w = static_cast<int>(input.dim(1));
  const int ch = static_cast<int>(input.dim(2));
  const int k = static_cast<int>(w.kernel.dim(0));
  const int out_h = static_cast<int>(out.dim(0));
  const int out_w = static_cast<int>(out.dim(1));
  const int pad_y = same_padding_before(in_h, out_h, stride, k);
  const int pad_x = same_padding_before(in_w, out_w, stride, k);
  const int32_t in_zp = in_qp.zero_point;
  const int32_t out_zp = out_qp.zero_point;
  const int8_t* in = input.data().data();
  const int8_t* wt = w.kernel.data().data();
  int8_t* o = out.data().data();

#pragma omp parallel for schedule(static) if (policy.parallel)
  for (int oy = 0; oy < out_h; ++oy) {
    std::vector<int32_t> acc(static_cast<size_t>(ch));
    for (int ox = 0; ox < out_w; ++ox) {
      std::copy(w.bias.begin(), w.bias.end(), acc.begin());
      const int y0 = oy * stride - pad_y;
      const int x0 = ox * stride - pad_x;
      const int ky_lo = std::max(0, -y0), ky_hi = std::min(k, in_h - y0);
      const int kx_lo = std::max(0, -x0), kx_hi = std::min(k, in_w - x0);
      for (int ky = ky_lo; ky < ky_hi; ++ky) {
        for (int kx = kx_lo; kx < kx_hi; ++kx) {
          const int8_t* px = in + (static_cast<size_t>(y0 + ky) * in_w + (x0 + kx)) * ch;
          const int8_t* wk = wt + static_cast<size_t>(ky * k + kx) * ch;
          for (int c = 0; c < ch; ++c) acc[c] += (static_cast<int32_t>(px[c]) - in_zp) * wk[c];
        }
      }
      int8_t* dst = o + (static_cast<size_t>(oy) * out_w + ox) * ch;
      for (int c = 0; c < ch; ++c) {
        dst[c] = requantize_clamped(acc[c], w.requant[c], out_zp, range.lo, range.hi);
      }
    }
  }
  return out;
}

TensorI8 fully_connected_i8(const TensorI8& input, const QuantParams& in_qp,
                            const LayerWeightsI8& w, const QuantParams& out_qp) {
  if (w.kernel.rank() != 2 || w.kernel.dim(0) != input.size()) {
    throw ShapeError("int8 fully_connected: kernel rows do not match input length");
  }
  const size_t cin = w.kernel.dim(0);
  const size_t cout = w.kernel.dim(1);
  if (w.bias.size() != cout || w.requant.size() != cout) {
    throw ShapeError("int8 fully_connected: bias/requant length");
  }
  std::vector<int32_t> acc(w.bias);
  for (size_t i = 0; i < cin; ++i) {
    const int32_t xv = static_cast<int32_t>(input[i]) - in_qp.zero_point;
    const int8_t* wrow = w.kernel.data().data() + i * cout;
    for (size_t j = 0; j < cout; ++j) acc[j] += xv * wrow[j];
  }
  TensorI8 out({1, 1, cout});
  for (size_t j = 0; j < cout; ++j) out[j] = requantize(acc[j], w.requant[j], out_qp.zero_point);
  return out;
}

TensorI8 global_avg_pool_i8(const TensorI8& input, const QuantParams& in_qp,
                            FixedPointMultiplier rescale, const QuantParams& out_qp) {
  if (input.rank() != 3) throw ShapeError("int8 global_avg_pool: expected an HWC tensor");
  const size_t hw = input.dim(0) * input.dim(1);
  const size_t ch = input.dim(2);
  std::vector<int32_t> sum(ch, 0);
  for (size_t p = 0; p < hw; ++p) {
    for (size_t c = 0; c < ch; ++c) sum[c] += static_cast<int32_t>(input[p * ch + c]) - in_qp.zero_point;
  }
  // rescale already carries the 1/(H*W) factor, so the mean is rounded once.
  TensorI8 out({1, 1, ch});
  for (size_t c = 0; c < ch; ++c) out[c] = requantize(sum[c], rescale, out_qp.zero_point);
  return out;
}

void add_inplace_i8(TensorI8& branch, const QuantParams& branch_qp, const TensorI8& skip,
                    const QuantParams& skip_qp, const AddRescale& rescale,
                    const QuantParams& out_qp) {
  if (branch.dims() != skip.dims()) throw ShapeError("int8 residual add: operand shapes differ");
  constexpr int64_t kOne = int64_t{1} << kResidualShift;
  for (size_t i = 0; i < branch.size(); ++i) {
    const int64_t b = (static_cast<int64_t>(branch[i]) - branch_qp.zero_point) * kOne;
    const int64_t s = (static_cast<int64_t>(skip[i]) - skip_qp.zero_point) * kOne;
    const int64_t sum =
        multiply_by_fixed_point(b, rescale.branch) + multiply_by_fixed_point(s, rescale.skip);
    branch[i] = saturate_int8(rounding_divide(sum, kOne) + out_qp.zero_point);
  }
}

namespace ref {

TensorI8 conv2d_i8(const TensorI8& input, const QuantParams& in_qp, const LayerWeightsI8& w,
                   const QuantParams& out_qp, int stride, ActRange range) {
  check_i8_conv(input, w, stride, false);
  TensorI8 out = make_output(input, stride, w.kernel.dim(3));
  const int in_h = static_cast<int>(input.dim(0)), in_w = static_cast<int>(input.dim(1));
  const int k = static_cast<int>(w.kernel.dim(0));
  const size_t cin = w.kernel.dim(2), cout = w.kernel.dim(3);
  const int pad_y = same_padding_before(in_h, static_cast<int>(out.dim(0)), stride, k);
  const int pad_x = same_padding_before(in_w, static_cast<int>(out.dim(1)), stride, k);
  for (size_t oy = 0; oy < out.dim(0); ++oy) {
    for (size_t ox = 0; ox < out.dim(1); ++ox) {
      for (size_t co = 0; co < cout; ++co) {
        int32_t acc = w.bias[co];
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = static_cast<int>(oy) * stride - pad_y + ky;
            const int ix = static_cast<int>(ox) * stride - pad_x + kx;
            if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
            for (size_t ci = 0; ci < cin; ++ci) {
              acc += (static_cast<int32_t>(input.at(iy, ix, ci)) - in_qp.zero_point) *
                     w.kernel[((static_cast<size_t>(ky) * k + kx) * cin + ci) * cout + co];
            }
          }
        }
        out.at(oy, ox, co) =
            requantize_clamped(acc, w.requant[co], out_qp.zero_point, range.lo, range.hi);
      }
    }
  }
  return out;
}

TensorI8 depthwise_conv_i8(const TensorI8& input, const QuantParams& in_qp,
                           const LayerWeightsI8& w, const QuantParams& out_qp, int stride,
                           ActRange range) {
  check_i8_conv(input, w, stride, true);
  TensorI8 out = make_output(input, stride, w.kernel.dim(2));
  const int in_h = static_cast<int>(input.dim(0)), in_w = static_cast<int>(input.dim(1));
  const int k = static_cast<int>(w.kernel.dim(0));
  const size_t ch = w.kernel.dim(2);
  const int pad_y = same_padding_before(in_h, static_cast<int>(out.dim(0)), stride, k);
  const int pad_x = same_padding_before(in_w, static_cast<int>(out.dim(1)), stride, k);
  for (size_t oy = 0; oy < out.dim(0); ++oy) {
    for (size_t ox = 0; ox < out.dim(1); ++ox) {
      for (size_t c = 0; c < ch; ++c) {
        int32_t acc = w.bias[c];
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = static_cast<int>(oy) * stride - pad_y + ky;
            const int ix = static_cast<int>(ox) * stride - pad_x + kx;
            if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
            acc += (static_cast<int32_t>(input.at(iy, ix, c)) - in_qp.zero_point) *
                   w.kernel[(static_cast<size_t>(ky) * k + kx) * ch + c];
          }
        }
        out.at(oy, ox, c) =
            requantize_clamped(acc, w.requant[c], out_qp.zero_point, range.lo, range.hi);
      }
    }
  }
  return out;
}

}  // namespace ref

// ---------------------------------------------------------------------------

const QuantParams& ModelWeightsI8::output_qparams() const {
  return act_qparams.at(static_cast<size_t>(execution_graph(spec).embedding_edge));
}

void prepare_int8_model(ModelWeightsI8& model) {
  validate_spec(model.spec);
  const ExecutionGraph graph = execution_graph(model.spec);
  const std::vector<ParamSlot> slots = param_slots(model.spec);
  if (model.act_qparams.size() != graph.edges.size()) {
    throw FormatError("int8 model must carry one quant param set per activation edge");
  }
  for (const QuantParams& q : model.act_qparams) {
    if (q.is_per_channel()) throw FormatError("activation quant params must be per-tensor");
    q.validate();
  }
  if (model.layers.size() != slots.size()) {
    throw FormatError("int8 model layer count does not match the spec");
  }
  for (size_t i = 0; i < slots.size(); ++i) {
    LayerWeightsI8& w = model.layers[i];
    const auto cout = static_cast<size_t>(slots[i].cout);
    if (w.kernel.dims() != slots[i].kernel_dims() || w.bias.size() != cout ||
        !w.weight_qparams.is_per_channel() || w.weight_qparams.scales.size() != cout) {
      throw FormatError("int8 weights do not match slot " + slots[i].name);
    }
    w.weight_qparams.validate();
  }

  model.add_rescale.assign(graph.ops.size(), AddRescale{});
  model.pool_rescale.assign(graph.ops.size(), FixedPointMultiplier{});
  model.act_range.assign(graph.ops.size(), ActRange{});
  for (size_t k = 0; k < graph.ops.size(); ++k) {
    const OpSpec& op = graph.ops[k];
    const QuantParams& in_qp = model.act_qparams[op.input];
    const QuantParams& out_qp = model.act_qparams[op.output];
    const double s_in = in_qp.scale();
    const double s_out = out_qp.scale();
    switch (op.kind) {
      case OpKind::Conv:
      case OpKind::Depthwise:
      case OpKind::FullyConnected: {
        LayerWeightsI8& w = model.layers[op.slot];
        w.requant.clear();
        for (float s_w : w.weight_qparams.scales) {
          w.requant.push_back(compute_fixed_point(s_in * static_cast<double>(s_w) / s_out));
        }
        model.act_range[k] =
            activation_range(slots[op.slot].relu6 ? Activation::Relu6 : Activation::None, out_qp);
        break;
      }
      case OpKind::Add:
        model.add_rescale[k] = AddRescale{
            compute_fixed_point(s_in / s_out),
            compute_fixed_point(static_cast<double>(model.act_qparams[op.input2].scale()) / s_out)};
        break;
      case OpKind::AvgPool: {
        const Shape3& shape = graph.edges[op.input].shape;
        const double count = static_cast<double>(shape.h) * shape.w;
        model.pool_rescale[k] = compute_fixed_point(s_in / (s_out * count));
        break;
      }
    }
  }
}

void run_op_i8(const ModelWeightsI8& model, const std::vector<ParamSlot>& slots, size_t op_index,
               const OpSpec& op, std::vector<TensorI8>& edges, ExecPolicy policy) {
  const TensorI8& in = edges[op.input];
  const QuantParams& in_qp = model.act_qparams[op.input];
  const QuantParams& out_qp = model.act_qparams[op.output];
  switch (op.kind) {
    case OpKind::Conv:
      edges[op.output] = conv2d_i8(in, in_qp, model.layers[op.slot], out_qp,
                                   slots[op.slot].stride, model.act_range[op_index], policy);
      break;
    case OpKind::Depthwise:
      edges[op.output] = depthwise_conv_i8(in, in_qp, model.layers[op.slot], out_qp,
                                           slots[op.slot].stride, model.act_range[op_index],
                                           policy);
      break;
    case OpKind::Add: {
      TensorI8 branch = std::move(edges[op.input2]);
      add_inplace_i8(branch, model.act_qparams[op.input2], in, in_qp, model.add_rescale[op_index],
                     out_qp);
      edges[op.output] = std::move(branch);
      break;
    }
    case OpKind::AvgPool:
      edges[op.output] = global_avg_pool_i8(in, in_qp, model.pool_rescale[op_index], out_qp);
      break;
    case OpKind::FullyConnected:
      edges[op.output] = fully_connected_i8(in, in_qp, model.layers[op.slot], out_qp);
      break;
  }
}

QuantizedEmbedding forward_i8(const ModelWeightsI8& model, const TensorI8& image_q,
                              ExecPolicy policy, const EdgeObserverI8& observer) {
  if (image_q.rank() != 3 || image_q.dim(0) != kInputSize || image_q.dim(1) != kInputSize ||
      image_q.dim(2) != kInputChannels) {
    throw ShapeError("input image must be 64x64x3");
  }
  const ExecutionGraph graph = execution_graph(model.spec);
  const std::vector<ParamSlot> slots = param_slots(model.spec);
  if (model.add_rescale.size() != graph.ops.size() || model.act_qparams.size() != graph.edges.size()) {
    throw FormatError("int8 model is not prepared");
  }
  std::vector<TensorI8> edges(graph.edges.size());
  edges[0] = image_q;
  if (observer) observer(0, edges[0]);
  for (size_t k = 0; k < graph.ops.size(); ++k) {
    run_op_i8(model, slots, k, graph.ops[k], edges, policy);
    if (observer) observer(graph.ops[k].output, edges[graph.ops[k].output]);
  }
  QuantizedEmbedding result;
  result.values = std::move(edges[graph.embedding_edge].values());
  result.qparams = model.act_qparams[graph.embedding_edge];
  return result;
}

TensorI8 quantize_image(const TensorF& image, const QuantParams& qp) {
  check_input_image(image);
  TensorI8 out(image.dims());
  for (size_t i = 0; i < image.size(); ++i) out[i] = quantize_affine(image[i], qp);
  return out;
}

std::vector<float> dequantize_embedding(std::span<const int8_t> embedding_q,
                                        const QuantParams& qp) {
  std::vector<float> real(embedding_q.size());
  for (size_t i = 0; i < embedding_q.size(); ++i) real[i] = dequantize_affine(embedding_q[i], qp);
  return l2_normalize(real);
}

}  // namespace tinyreid
