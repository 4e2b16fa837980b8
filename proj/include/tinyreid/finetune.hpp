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
#include <span>
#include <vector>

#include "tinyreid/dataset.hpp"
#include "tinyreid/kernels_fp32.hpp"

namespace tinyreid {

// The embedding FC, the only trainable state during few-shot adaptation.
// W is in_dim x out_dim row-major (same layout as the FC kernel).
struct HeadParams {
  size_t in_dim = 0;
  size_t out_dim = 0;
  std::vector<double> W;
  std::vector<double> b;

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

HeadParams head_from_model(const ModelWeightsF32& model);
// Writes the head into the embedding FC; nothing else in the model changes.
void apply_head(ModelWeightsF32& model, const HeadParams& head);

using FeatureSet = std::vector<std::vector<double>>;

// Pooled backbone features, computed once per image.
FeatureSet extract_features(const ModelWeightsF32& model, const std::vector<TensorF>& images,
                            ExecPolicy policy = {});

struct Triplet {
  size_t anchor = 0;
  size_t positive = 0;
  size_t negative = 0;
};

// Every (a, p, n) with label[a] == label[p] != label[n] and a != p.
std::vector<Triplet> batch_all_triplets(const std::vector<int>& labels);

double triplet_hinge(double d_ap, double d_an, double margin);
// Hinge on squared Euclidean distances between (unit) embeddings.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

// normalize(W^T f + b). Throws DataError when the pre-normalization norm is
// below 1e-12.
std::vector<double> head_embed(const HeadParams& head, std::span<const double> feature);

double head_loss(const FeatureSet& features, const HeadParams& head,
                 const std::vector<Triplet>& triplets, double margin);

struct HeadGradient {
  std::vector<double> dW;
  std::vector<double> db;
  double loss = 0.0;
};

// Analytic gradient of the mean triplet loss through the FC and the L2
// normalization.
HeadGradient head_gradient(const FeatureSet& features, const HeadParams& head,
                           const std::vector<Triplet>& triplets, double margin);

struct FinetuneConfig {
  double margin = 0.2;
  double lr = 0.01;
  int epochs = 100;
  uint64_t seed = 0;
  // Triplets per update; 0 uses every triplet (one full-batch step per epoch).
  size_t batch_size = 0;
};

struct FinetuneResult {
  HeadParams head;
  std::vector<double> loss_history;  // loss over the full set; [0] is before training
  int best_epoch = 0;
};

// Plain gradient descent on the head. Returns the parameters after the last
// epoch that strictly improved the full-set triplet loss.
FinetuneResult finetune_head(const HeadParams& initial, const FeatureSet& features,
                             const std::vector<int>& labels, const FinetuneConfig& config);

// Keeps up to `shots` images per identity, chosen by seed; output keeps the
// input order.
std::vector<ManifestRecord> select_shots(const std::vector<ManifestRecord>& rows, size_t shots,
                                         uint64_t seed);

}  // namespace tinyreid
