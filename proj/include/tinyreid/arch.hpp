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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tinyreid {

inline constexpr int kInputSize = 64;
inline constexpr int kInputChannels = 3;
inline constexpr int kHeadChannels = 1280;
inline constexpr int kMaxBlocks = 16;
inline constexpr int kDefaultEmbedDim = 128;

struct Shape3 {
  int h = 0;
  int w = 0;
  int c = 0;

  size_t elements() const { return static_cast<size_t>(h) * w * c; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& s);

enum class LayerKind { Stem, Bottleneck, HeadConv, GlobalAvgPool, EmbeddingFC, L2Norm };

const char* to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Stem;
  Shape3 in;
  Shape3 out;
  int expansion = 1;  // bottlenecks only
  int stride = 1;
  bool has_residual = false;

  int expanded_channels() const { return in.c * expansion; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Width-scaled (alpha), depth-truncated (n_blocks) inverted-residual backbone
// with a d-dimensional embedding head. Layers are
// Stem, Bottleneck_0 .. Bottleneck_N, HeadConv, GlobalAvgPool, EmbeddingFC, L2Norm.
struct ModelSpec {
  double alpha = 0.35;
  int n_blocks = 7;
  int embed_dim = kDefaultEmbedDim;
  std::vector<LayerSpec> layers;

  size_t bottleneck_count() const { return static_cast<size_t>(n_blocks) + 1; }
  const LayerSpec& bottleneck(size_t b) const { return layers.at(1 + b); }
  const LayerSpec& head() const { return layers.at(layers.size() - 4); }
  int feature_dim() const { return head().out.c; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// max(8, floor(alpha * c)).
int scale_channels(int c, double alpha);

ModelSpec build_spec(double alpha, int n_blocks, int embed_dim = kDefaultEmbedDim);

// Throws ShapeError if consecutive layers do not chain or a layer breaks its
// own shape rules.
void validate_spec(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Parameter layout. Every parameterized op in execution order, shared by the
// kernels, the quantizer and the file formats.

enum class ParamOp : uint32_t { Conv = 0, Depthwise = 1, FullyConnected = 2 };

struct ParamSlot {
  std::string name;
  size_t layer = 0;  // index into ModelSpec::layers
  ParamOp op = ParamOp::Conv;
  int kernel = 1;  // square kernel size (1 or 3); 1 for FC
  int cin = 0;
  int cout = 0;
  int stride = 1;
  bool relu6 = false;
  // Convolutions carry folded batch-norm as a per-channel scale next to the
  // bias; the embedding FC carries only a bias.
  bool has_channel_scale = true;

  std::vector<size_t> kernel_dims() const;
  size_t kernel_elements() const;
  size_t param_count() const;
};

std::vector<ParamSlot> param_slots(const ModelSpec& spec);

size_t param_count(const ModelSpec& spec);
// Parameters of the Stem and bottleneck layers only.
size_t backbone_param_count(const ModelSpec& spec);
size_t layer_param_count(const ModelSpec& spec, size_t layer);

// ---------------------------------------------------------------------------
// Activation edges and the op sequence of the straight-line executor.

struct EdgeSpec {
  std::string name;
  Shape3 shape;
  size_t layer = 0;
};

enum class OpKind { Conv, Depthwise, Add, AvgPool, FullyConnected };

struct OpSpec {
  OpKind kind = OpKind::Conv;
  size_t layer = 0;
  int slot = -1;      // ParamSlot index for Conv/Depthwise/FullyConnected
  int input = -1;     // edge index
  int input2 = -1;    // second operand of Add (the projection output)
  int output = -1;    // edge index
  // Add writes into the buffer of input2; the output edge aliases it.
  bool in_place = false;
};

struct ExecutionGraph {
  std::vector<EdgeSpec> edges;  // edges[0] is the network input
  std::vector<OpSpec> ops;
  int embedding_edge = -1;      // pre-normalization embedding
  int feature_edge = -1;        // pooled head features
};

ExecutionGraph execution_graph(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Tensor-arena planning.

struct LayerBytes {
  size_t layer = 0;
  size_t bytes = 0;
};

struct ArenaPlan {
  size_t input_bytes = 0;
  std::vector<LayerBytes> per_layer_bytes;
  size_t peak_bytes = 0;
  size_t flash_bytes = 0;
};

// Live bytes per layer for a one-op-at-a-time executor: every op holds its
// inputs and output; a bottleneck input stays live until the residual add
// that consumes it; the add accumulates into the projection buffer.
ArenaPlan plan_layers(const std::vector<LayerSpec>& layers, size_t bytes_per_element);
ArenaPlan plan_arena(const ModelSpec& spec, size_t bytes_per_element);

// One line per layer: kind, in_shape, out_shape, params, activation bytes.
std::string format_layer_table(const ModelSpec& spec, size_t bytes_per_element);

}  // namespace tinyreid
