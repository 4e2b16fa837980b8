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

#include "tinyreid/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tinyreid/error.hpp"
#include "tinyreid/random_model.hpp"

namespace tinyreid {

HeadParams head_from_model(const ModelWeightsF32& model) {
  const LayerWeightsF32& fc = model.embedding();
  HeadParams h;
  h.in_dim = fc.kernel.dim(0);
  h.out_dim = fc.kernel.dim(1);
  h.W.assign(fc.kernel.values().begin(), fc.kernel.values().end());
  h.b.assign(fc.bias.begin(), fc.bias.end());
  return h;
}

void apply_head(ModelWeightsF32& model, const HeadParams& head) {
  LayerWeightsF32& fc = model.embedding();
  if (fc.kernel.dim(0) != head.in_dim || fc.kernel.dim(1) != head.out_dim) {
    throw ShapeError("head dims do not match the model's embedding layer");
  }
  for (size_t i = 0; i < head.W.size(); ++i) fc.kernel[i] = static_cast<float>(head.W[i]);
  for (size_t j = 0; j < head.b.size(); ++j) fc.bias[j] = static_cast<float>(head.b[j]);
}

FeatureSet extract_features(const ModelWeightsF32& model, const std::vector<TensorF>& images,
                            ExecPolicy policy) {
  FeatureSet out(images.size());
  const int n = static_cast<int>(images.size());
  const ExecPolicy inner{false, policy.wide_accumulate};
#pragma omp parallel for schedule(dynamic) if (policy.parallel)
  for (int i = 0; i < n; ++i) {
    const std::vector<float> f = head_features_f32(model, images[i], inner);
    out[i].assign(f.begin(), f.end());
  }
  return out;
}

std::vector<Triplet> batch_all_triplets(const std::vector<int>& labels) {
  std::vector<Triplet> out;
  for (size_t a = 0; a < labels.size(); ++a) {
    for (size_t p = 0; p < labels.size(); ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      for (size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] != labels[a]) out.push_back(Triplet{a, p, n});
      }
    }
  }
  return out;
}

double triplet_hinge(double d_ap, double d_an, double margin) {
  return std::max(0.0, d_ap - d_an + margin);
}

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s;
}

std::vector<double> head_linear(const HeadParams& head, std::span<const double> f) {
  if (f.size() != head.in_dim) throw ShapeError("feature length does not match the head");
  std::vector<double> z(head.b);
  for (size_t k = 0; k < head.in_dim; ++k) {
    const double fk = f[k];
    const double* row = head.W.data() + k * head.out_dim;
    for (size_t j = 0; j < head.out_dim; ++j) z[j] += fk * row[j];
  }
  return z;
}

double norm_of(const std::vector<double>& z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  return triplet_hinge(squared_distance(anchor, positive), squared_distance(anchor, negative),
                       margin);
}

std::vector<double> head_embed(const HeadParams& head, std::span<const double> feature) {
  std::vector<double> z = head_linear(head, feature);
  const double n = norm_of(z);
  if (n < 1e-12) throw DataError("degenerate embedding norm");
  for (double& v : z) v /= n;
  return z;
}

double head_loss(const FeatureSet& features, const HeadParams& head,
                 const std::vector<Triplet>& triplets, double margin) {
  if (triplets.empty()) throw InvalidArgument("triplet loss needs at least one triplet");
  std::vector<std::vector<double>> emb;
  emb.reserve(features.size());
  for (const auto& f : features) emb.push_back(head_embed(head, f));
  double total = 0.0;
  for (const Triplet& t : triplets) {
    total += triplet_loss(emb[t.anchor], emb[t.positive], emb[t.negative], margin);
  }
  return total / static_cast<double>(triplets.size());
}

HeadGradient head_gradient(const FeatureSet& features, const HeadParams& head,
                           const std::vector<Triplet>& triplets, double margin) {
  if (triplets.empty()) throw InvalidArgument("head gradient needs at least one triplet");
  const size_t d = head.out_dim;
  std::vector<std::vector<double>> z, e;
  std::vector<double> norms;
  for (const auto& f : features) {
    z.push_back(head_linear(head, f));
    const double n = norm_of(z.back());
    if (n < 1e-12) throw DataError("degenerate embedding norm");
    norms.push_back(n);
    std::vector<double> unit(z.back());
    for (double& v : unit) v /= n;
    e.push_back(std::move(unit));
  }

  HeadGradient g;
  g.dW.assign(head.W.size(), 0.0);
  g.db.assign(d, 0.0);
  const double inv_t = 1.0 / static_cast<double>(triplets.size());
  std::vector<std::vector<double>> grad_e(features.size(), std::vector<double>(d, 0.0));
  std::vector<bool> touched(features.size(), false);
  for (const Triplet& t : triplets) {
    const auto& a = e[t.anchor];
    const auto& p = e[t.positive];
    const auto& n = e[t.negative];
    const double loss = triplet_loss(a, p, n, margin);
    g.loss += loss * inv_t;
    if (loss <= 0.0) continue;
    for (size_t j = 0; j < d; ++j) {
      grad_e[t.anchor][j] += 2.0 * (n[j] - p[j]) * inv_t;
      grad_e[t.positive][j] += -2.0 * (a[j] - p[j]) * inv_t;
      grad_e[t.negative][j] += 2.0 * (a[j] - n[j]) * inv_t;
    }
    touched[t.anchor] = touched[t.positive] = touched[t.negative] = true;
  }

  // dL/dz = (I - e e^T) dL/de / |z|
  for (size_t i = 0; i < features.size(); ++i) {
    if (!touched[i]) continue;
    double proj = 0.0;
    for (size_t j = 0; j < d; ++j) proj += e[i][j] * grad_e[i][j];
    std::vector<double> gz(d);
    for (size_t j = 0; j < d; ++j) gz[j] = (grad_e[i][j] - e[i][j] * proj) / norms[i];
    for (size_t k = 0; k < head.in_dim; ++k) {
      const double fk = features[i][k];
      double* row = g.dW.data() + k * d;
      for (size_t j = 0; j < d; ++j) row[j] += fk * gz[j];
    }
    for (size_t j = 0; j < d; ++j) g.db[j] += gz[j];
  }
  return g;
}

FinetuneResult finetune_head(const HeadParams& initial, const FeatureSet& features,
                             const std::vector<int>& labels, const FinetuneConfig& config) {
  if (features.size() != labels.size()) throw InvalidArgument("features and labels differ in length");
  if (config.epochs < 0 || !(config.lr > 0.0) || !(config.margin >= 0.0)) {
    throw InvalidArgument("fine-tuning needs epochs >= 0, lr > 0, margin >= 0");
  }
  std::map<int, size_t> per_label;
  for (int l : labels) ++per_label[l];
  size_t usable = 0;
  for (const auto& [label, count] : per_label) usable += count >= 2 ? 1 : 0;
  if (usable < 2) {
    throw DataError("fine-tuning needs at least two identities with two or more images each");
  }

  std::vector<Triplet> triplets = batch_all_triplets(labels);
  DeterministicRng rng(config.seed);
  FinetuneResult result;
  result.head = initial;
  HeadParams head = initial;
  double best = head_loss(features, head, triplets, config.margin);
  result.loss_history.push_back(best);

  auto step = [&](const std::vector<Triplet>& batch) {
    const HeadGradient g = head_gradient(features, head, batch, config.margin);
    for (size_t i = 0; i < head.W.size(); ++i) head.W[i] -= config.lr * g.dW[i];
    for (size_t j = 0; j < head.b.size(); ++j) head.b[j] -= config.lr * g.db[j];
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.batch_size == 0 || config.batch_size >= triplets.size()) {
      step(triplets);
    } else {
      rng.shuffle(triplets);
      for (size_t start = 0; start < triplets.size(); start += config.batch_size) {
        const size_t end = std::min(triplets.size(), start + config.batch_size);
        step(std::vector<Triplet>(triplets.begin() + start, triplets.begin() + end));
      }
    }
    const double loss = head_loss(features, head, triplets, config.margin);
    result.loss_history.push_back(loss);
    if (loss < best) {
      best = loss;
      result.head = head;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::vector<ManifestRecord> select_shots(const std::vector<ManifestRecord>& rows, size_t shots,
                                         uint64_t seed) {
  if (shots < 1) throw InvalidArgument("shots must be at least 1");
  std::map<std::string, std::vector<size_t>> by_identity;
  for (size_t i = 0; i < rows.size(); ++i) by_identity[rows[i].identity].push_back(i);
  DeterministicRng rng(seed);
  std::vector<bool> keep(rows.size(), false);
  for (auto& [id, idx] : by_identity) {
    if (idx.size() > shots) {
      rng.shuffle(idx);
      idx.resize(shots);
    }
    for (size_t i : idx) keep[i] = true;
  }
  std::vector<ManifestRecord> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (keep[i]) out.push_back(rows[i]);
  }
  return out;
}

}  // namespace tinyreid
