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

#include "tinyreid/reid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tinyreid/error.hpp"
#include "tinyreid/image_io.hpp"
#include "tinyreid/model_store.hpp"

namespace tinyreid {

void GalleryDB::validate() const {
  if (embed_dim <= 0) throw DataError("gallery embedding dimension must be positive");
  for (const GalleryRecord& r : records) {
    if (r.embedding.size() != static_cast<size_t>(embed_dim)) {
      throw DataError("gallery record '" + r.identity + "' has the wrong dimension");
    }
    double sq = 0.0;
    for (float v : r.embedding) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-5) {
      throw DataError("gallery record '" + r.identity + "' is not unit norm");
    }
  }
}

const ModelSpec& spec_of(const Model& model) {
  return std::visit([](const auto& m) -> const ModelSpec& { return m.spec; }, model);
}

Model load_any_model(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  switch (detect_file_kind(bytes)) {
    case FileKind::ModelF32: return decode_model_f32(bytes);
    case FileKind::ModelI8: return decode_model_i8(bytes);
    default: throw FormatError("bad magic: " + path.string() + " is not a model file");
  }
}

std::vector<float> embed(const ModelWeightsF32& model, const TensorF& image, ExecPolicy policy) {
  return forward_f32(model, image, policy);
}

std::vector<float> embed(const ModelWeightsI8& model, const TensorF& image, ExecPolicy policy) {
  const TensorI8 image_q = quantize_image(image, model.input_qparams());
  const QuantizedEmbedding e = forward_i8(model, image_q, policy);
  return dequantize_embedding(e.values, e.qparams);
}

std::vector<float> embed(const Model& model, const TensorF& image, ExecPolicy policy) {
  return std::visit([&](const auto& m) { return embed(m, image, policy); }, model);
}

std::vector<std::vector<float>> embed_batch(const Model& model, const std::vector<TensorF>& images,
                                            ExecPolicy policy) {
  std::vector<std::vector<float>> out(images.size());
  const int n = static_cast<int>(images.size());
  const ExecPolicy inner{false, policy.wide_accumulate};
#pragma omp parallel for schedule(dynamic) if (policy.parallel)
  for (int i = 0; i < n; ++i) out[i] = embed(model, images[i], inner);
  return out;
}

std::vector<TensorF> load_images(const std::vector<ManifestRecord>& rows) {
  std::vector<TensorF> images;
  images.reserve(rows.size());
  for (const ManifestRecord& r : rows) images.push_back(load_image(r.path));
  return images;
}

GalleryDB make_gallery(const std::vector<std::string>& identities,
                       std::vector<std::vector<float>> embeddings) {
  if (identities.size() != embeddings.size()) {
    throw InvalidArgument("identity and embedding counts differ");
  }
  if (identities.empty()) throw DataError("cannot enroll an empty gallery");
  GalleryDB db;
  db.embed_dim = static_cast<int>(embeddings.front().size());
  for (size_t i = 0; i < identities.size(); ++i) {
    db.records.push_back(GalleryRecord{identities[i], std::move(embeddings[i])});
  }
  db.validate();
  return db;
}

GalleryDB enroll(const std::vector<ManifestRecord>& gallery_rows, const Model& model,
                 ExecPolicy policy) {
  if (gallery_rows.empty()) throw DataError("cannot enroll an empty gallery");
  std::vector<std::string> ids;
  for (const ManifestRecord& r : gallery_rows) ids.push_back(r.identity);
  return make_gallery(ids, embed_batch(model, load_images(gallery_rows), policy));
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
  return 1.0 - dot;
}

std::vector<size_t> rank_gallery(const GalleryDB& db, std::span<const float> q,
                                 std::vector<double>* distances) {
  if (db.empty()) throw DataError("gallery is empty");
  if (q.size() != static_cast<size_t>(db.embed_dim)) {
    throw ShapeError("query dimension " + std::to_string(q.size()) +
                     " does not match gallery dimension " + std::to_string(db.embed_dim));
  }
  std::vector<double> dist(db.size());
  for (size_t i = 0; i < db.size(); ++i) dist[i] = cosine_distance(q, db.records[i].embedding);
  std::vector<size_t> order(db.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return dist[a] < dist[b]; });
  if (distances) *distances = std::move(dist);
  return order;
}

std::vector<Match> query(const GalleryDB& db, std::span<const float> q, size_t k) {
  if (k < 1) throw InvalidArgument("top-k must be at least 1");
  std::vector<double> dist;
  const std::vector<size_t> order = rank_gallery(db, q, &dist);
  std::vector<Match> out;
  for (size_t r = 0; r < std::min(k, order.size()); ++r) {
    const size_t i = order[r];
    out.push_back(Match{db.records[i].identity, i, dist[i]});
  }
  return out;
}

}  // namespace tinyreid
