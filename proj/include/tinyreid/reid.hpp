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

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tinyreid/dataset.hpp"
#include "tinyreid/gallery.hpp"
#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/kernels_int8.hpp"

namespace tinyreid {

// Either backend: FP32 reference ("cluster") or integer-only ("device").
using Model = std::variant<ModelWeightsF32, ModelWeightsI8>;

const ModelSpec& spec_of(const Model& model);
Model load_any_model(const std::filesystem::path& path);

std::vector<float> embed(const ModelWeightsF32& model, const TensorF& image, ExecPolicy policy = {});
// Quantizes the image with the model's input params, runs the integer
// forward pass, then dequantizes and normalizes the embedding.
std::vector<float> embed(const ModelWeightsI8& model, const TensorF& image, ExecPolicy policy = {});
std::vector<float> embed(const Model& model, const TensorF& image, ExecPolicy policy = {});

// Parallel across images; each image runs a serial forward pass.
std::vector<std::vector<float>> embed_batch(const Model& model, const std::vector<TensorF>& images,
                                            ExecPolicy policy = {});

std::vector<TensorF> load_images(const std::vector<ManifestRecord>& rows);

GalleryDB make_gallery(const std::vector<std::string>& identities,
                       std::vector<std::vector<float>> embeddings);
// One record per gallery row, in manifest order.
GalleryDB enroll(const std::vector<ManifestRecord>& gallery_rows, const Model& model,
                 ExecPolicy policy = {});

// 1 - <a, b>, accumulated in double.
double cosine_distance(std::span<const float> a, std::span<const float> b);

struct Match {
  std::string identity;
  size_t index = 0;
  double distance = 0.0;
};

// Full ranking of the gallery by ascending distance, ties by record index.
std::vector<size_t> rank_gallery(const GalleryDB& db, std::span<const float> q,
                                 std::vector<double>* distances = nullptr);

// The min(k, |db|) nearest records.
std::vector<Match> query(const GalleryDB& db, std::span<const float> q, size_t k);

}  // namespace tinyreid
