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

#include "tinyreid/arch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tinyreid/error.hpp"
#include "tinyreid/model_store.hpp"

namespace tinyreid {

namespace {

// Reference inverted-residual configuration after block 0.
constexpr std::array<int, kMaxBlocks> kBlockChannels = {24, 24, 32,  32,  32,  64,  64,  64,
                                                        64, 96, 96,  96,  160, 160, 160, 320};
constexpr std::array<int, kMaxBlocks> kBlockStrides = {2, 1, 2, 1, 1, 2, 1, 1,
                                                       1, 1, 1, 1, 2, 1, 1, 1};
constexpr int kStemChannels = 32;
constexpr int kFirstBlockChannels = 16;
constexpr int kExpansion = 6;

int down(int extent, int stride) { return (extent + stride - 1) / stride; }

Shape3 strided(const Shape3& in, int stride, int channels) {
  return Shape3{down(in.h, stride), down(in.w, stride), channels};
}

LayerSpec bottleneck(const Shape3& in, int out_c, int stride, int expansion) {
  LayerSpec l;
  l.kind = LayerKind::Bottleneck;
  l.in = in;
  l.out = strided(in, stride, out_c);
  l.expansion = expansion;
  l.stride = stride;
  l.has_residual = stride == 1 && l.in == l.out;
  return l;
}

}  // namespace

std::string to_string(const Shape3& s) {
  return std::to_string(s.h) + "x" + std::to_string(s.w) + "x" + std::to_string(s.c);
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Stem: return "Stem";
    case LayerKind::Bottleneck: return "Bottleneck";
    case LayerKind::HeadConv: return "HeadConv";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::EmbeddingFC: return "EmbeddingFC";
    case LayerKind::L2Norm: return "L2Norm";
  }
  return "?";
}

int scale_channels(int c, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0 || !std::isfinite(alpha)) {
    throw InvalidArgument("width multiplier must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (c < 1) throw InvalidArgument("channel count must be positive");
  // The epsilon keeps products such as 0.35 * 320 = 111.99999... on 112.
  const int scaled = static_cast<int>(std::floor(alpha * c + 1e-9));
  return std::max(8, scaled);
}

ModelSpec build_spec(double alpha, int n_blocks, int embed_dim) {
  if (n_blocks < 1 || n_blocks > kMaxBlocks) {
    throw InvalidArgument("n_blocks must lie in [1, 16], got " + std::to_string(n_blocks));
  }
  if (embed_dim < 1) throw InvalidArgument("embed_dim must be positive");

  ModelSpec spec;
  spec.alpha = alpha;
  spec.n_blocks = n_blocks;
  spec.embed_dim = embed_dim;

  LayerSpec stem;
  stem.kind = LayerKind::Stem;
  stem.in = Shape3{kInputSize, kInputSize, kInputChannels};
  stem.stride = 2;
  stem.out = strided(stem.in, 2, scale_channels(kStemChannels, alpha));
  spec.layers.push_back(stem);

  spec.layers.push_back(bottleneck(stem.out, scale_channels(kFirstBlockChannels, alpha), 1, 1));
  for (int b = 0; b < n_blocks; ++b) {
    spec.layers.push_back(bottleneck(spec.layers.back().out,
                                     scale_channels(kBlockChannels[b], alpha), kBlockStrides[b],
                                     kExpansion));
  }

  LayerSpec head;
  head.kind = LayerKind::HeadConv;
  head.in = spec.layers.back().out;
  head.out = Shape3{head.in.h, head.in.w, kHeadChannels};
  spec.layers.push_back(head);

  LayerSpec pool;
  pool.kind = LayerKind::GlobalAvgPool;
  pool.in = head.out;
  pool.out = Shape3{1, 1, kHeadChannels};
  spec.layers.push_back(pool);

  LayerSpec fc;
  fc.kind = LayerKind::EmbeddingFC;
  fc.in = pool.out;
  fc.out = Shape3{1, 1, embed_dim};
  spec.layers.push_back(fc);

  LayerSpec norm;
  norm.kind = LayerKind::L2Norm;
  norm.in = fc.out;
  norm.out = fc.out;
  spec.layers.push_back(norm);

  validate_spec(spec);
  return spec;
}

void validate_spec(const ModelSpec& spec) {
  if (spec.layers.size() != spec.bottleneck_count() + 5) {
    throw ShapeError("layer list does not match n_blocks");
  }
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (i + 1 < spec.layers.size() && !(l.out == spec.layers[i + 1].in)) {
      throw ShapeError("layer " + std::to_string(i) + " output does not chain into layer " +
                       std::to_string(i + 1));
    }
    if (l.out.h != down(l.in.h, l.stride) && l.kind != LayerKind::GlobalAvgPool &&
        l.kind != LayerKind::EmbeddingFC && l.kind != LayerKind::L2Norm) {
      throw ShapeError("layer " + std::to_string(i) + " spatial size does not follow its stride");
    }
    if (l.has_residual != (l.stride == 1 && l.in == l.out && l.kind == LayerKind::Bottleneck)) {
      throw ShapeError("layer " + std::to_string(i) + " residual flag is inconsistent");
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<size_t> ParamSlot::kernel_dims() const {
  const auto k = static_cast<size_t>(kernel);
  switch (op) {
    case ParamOp::Conv: return {k, k, static_cast<size_t>(cin), static_cast<size_t>(cout)};
    case ParamOp::Depthwise: return {k, k, static_cast<size_t>(cout)};
    case ParamOp::FullyConnected: return {static_cast<size_t>(cin), static_cast<size_t>(cout)};
  }
  return {};
}

size_t ParamSlot::kernel_elements() const {
  size_t n = 1;
  for (size_t d : kernel_dims()) n *= d;
  return n;
}

size_t ParamSlot::param_count() const {
  return kernel_elements() + static_cast<size_t>(cout) * (has_channel_scale ? 2 : 1);
}

std::vector<ParamSlot> param_slots(const ModelSpec& spec) {
  std::vector<ParamSlot> slots;
  auto conv = [&](std::string name, size_t layer, int k, int cin, int cout, int stride,
                  bool relu6) {
    slots.push_back(ParamSlot{std::move(name), layer, ParamOp::Conv, k, cin, cout, stride, relu6,
                              true});
  };
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Stem:
        conv("stem", i, 3, l.in.c, l.out.c, l.stride, true);
        break;
      case LayerKind::Bottleneck: {
        const std::string prefix = "block" + std::to_string(i - 1);
        const int ce = l.expanded_channels();
        if (l.expansion > 1) conv(prefix + ".expand", i, 1, l.in.c, ce, 1, true);
        slots.push_back(
            ParamSlot{prefix + ".depthwise", i, ParamOp::Depthwise, 3, ce, ce, l.stride, true, true});
        conv(prefix + ".project", i, 1, ce, l.out.c, 1, false);
        break;
      }
      case LayerKind::HeadConv:
        conv("head", i, 1, l.in.c, l.out.c, 1, true);
        break;
      case LayerKind::EmbeddingFC:
        slots.push_back(ParamSlot{"embedding", i, ParamOp::FullyConnected, 1, l.in.c, l.out.c, 1,
                                  false, false});
        break;
      case LayerKind::GlobalAvgPool:
      case LayerKind::L2Norm:
        break;
    }
  }
  return slots;
}

size_t param_count(const ModelSpec& spec) {
  size_t n = 0;
  for (const ParamSlot& s : param_slots(spec)) n += s.param_count();
  return n;
}

size_t layer_param_count(const ModelSpec& spec, size_t layer) {
  size_t n = 0;
  for (const ParamSlot& s : param_slots(spec)) {
    if (s.layer == layer) n += s.param_count();
  }
  return n;
}

size_t backbone_param_count(const ModelSpec& spec) {
  size_t n = 0;
  for (const ParamSlot& s : param_slots(spec)) {
    const LayerKind kind = spec.layers[s.layer].kind;
    if (kind == LayerKind::Stem || kind == LayerKind::Bottleneck) n += s.param_count();
  }
  return n;
}

// ---------------------------------------------------------------------------

ExecutionGraph execution_graph(const ModelSpec& spec) {
  ExecutionGraph g;
  const std::vector<ParamSlot> slots = param_slots(spec);
  int slot = 0;
  auto edge = [&](std::string name, Shape3 shape, size_t layer) {
    g.edges.push_back(EdgeSpec{std::move(name), shape, layer});
    return static_cast<int>(g.edges.size() - 1);
  };
  auto param_op = [&](OpKind kind, size_t layer, int in, Shape3 out_shape) {
    const int out = edge(slots[slot].name, out_shape, layer);
    g.ops.push_back(OpSpec{kind, layer, slot, in, -1, out, false});
    ++slot;
    return out;
  };

  int cur = edge("input", spec.layers.front().in, 0);
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Stem:
      case LayerKind::HeadConv:
        cur = param_op(OpKind::Conv, i, cur, l.out);
        break;
      case LayerKind::Bottleneck: {
        const int block_in = cur;
        const int ce = l.expanded_channels();
        int x = cur;
        if (l.expansion > 1) x = param_op(OpKind::Conv, i, x, Shape3{l.in.h, l.in.w, ce});
        x = param_op(OpKind::Depthwise, i, x, Shape3{l.out.h, l.out.w, ce});
        x = param_op(OpKind::Conv, i, x, l.out);
        if (l.has_residual) {
          const int out = edge("block" + std::to_string(i - 1) + ".add", l.out, i);
          g.ops.push_back(OpSpec{OpKind::Add, i, -1, block_in, x, out, true});
          x = out;
        }
        cur = x;
        break;
      }
      case LayerKind::GlobalAvgPool: {
        const int out = edge("pool", l.out, i);
        g.ops.push_back(OpSpec{OpKind::AvgPool, i, -1, cur, -1, out, false});
        cur = out;
        g.feature_edge = out;
        break;
      }
      case LayerKind::EmbeddingFC:
        cur = param_op(OpKind::FullyConnected, i, cur, l.out);
        g.embedding_edge = cur;
        break;
      case LayerKind::L2Norm:
        break;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

size_t bottleneck_live_elements(const LayerSpec& l) {
  const size_t in = l.in.elements();
  const size_t out = l.out.elements();
  const size_t ce = static_cast<size_t>(l.expanded_channels());
  const size_t depthwise_out = static_cast<size_t>(l.out.h) * l.out.w * ce;
  const size_t skip = l.has_residual ? in : 0;
  if (l.expansion > 1) {
    const size_t expanded = static_cast<size_t>(l.in.h) * l.in.w * ce;
    return std::max({in + expanded, expanded + depthwise_out + skip, depthwise_out + out + skip});
  }
  return std::max(in + depthwise_out, depthwise_out + out + skip);
}

}  // namespace

ArenaPlan plan_layers(const std::vector<LayerSpec>& layers, size_t bytes_per_element) {
  if (bytes_per_element != 1 && bytes_per_element != 4) {
    throw InvalidArgument("bytes_per_element must be 1 or 4");
  }
  ArenaPlan plan;
  if (!layers.empty()) plan.input_bytes = layers.front().in.elements() * bytes_per_element;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const size_t elements = l.kind == LayerKind::Bottleneck ? bottleneck_live_elements(l)
                                                            : l.in.elements() + l.out.elements();
    plan.per_layer_bytes.push_back(LayerBytes{i, elements * bytes_per_element});
    plan.peak_bytes = std::max(plan.peak_bytes, elements * bytes_per_element);
  }
  return plan;
}

ArenaPlan plan_arena(const ModelSpec& spec, size_t bytes_per_element) {
  ArenaPlan plan = plan_layers(spec.layers, bytes_per_element);
  plan.flash_bytes =
      bytes_per_element == 4 ? serialized_size_f32(spec) : serialized_size_i8(spec);
  return plan;
}

std::string format_layer_table(const ModelSpec& spec, size_t bytes_per_element) {
  const ArenaPlan plan = plan_layers(spec.layers, bytes_per_element);
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-4s %-14s %-12s %-12s %10s %12s\n", "idx", "kind", "in",
                "out", "params", "act_bytes");
  os << line;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    std::snprintf(line, sizeof line, "%-4zu %-14s %-12s %-12s %10zu %12zu\n", i, to_string(l.kind),
                  to_string(l.in).c_str(), to_string(l.out).c_str(), layer_param_count(spec, i),
                  plan.per_layer_bytes[i].bytes);
    os << line;
  }
  return os.str();
}

}  // namespace tinyreid
