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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "tinyreid/image_io.hpp"
#include "tinyreid/model_store.hpp"
#include "tinyreid/ptq.hpp"
#include "tinyreid/random_model.hpp"
#include "tinyreid/reid.hpp"

using namespace tinyreid;
using testing_support::Gen;
using testing_support::TempDir;

namespace {

std::vector<float> unit(Gen& g, size_t d) {
  const auto v = g.floats(d, -1, 1);
  return l2_normalize(std::span<const float>(v));
}

GalleryDB random_db(Gen& g, size_t n, size_t d) {
  std::vector<std::string> ids;
  std::vector<std::vector<float>> embs;
  for (size_t i = 0; i < n; ++i) {
    ids.push_back("id" + std::to_string(i % 4));
    embs.push_back(unit(g, d));
  }
  return make_gallery(ids, embs);
}

}  // namespace

TEST(Query, DominantAxis) {
  const GalleryDB db = make_gallery({"A", "B"}, {{1.0f, 0.0f}, {0.0f, 1.0f}});
  const std::vector<float> raw{0.9f, 0.1f};
  const auto q = l2_normalize(std::span<const float>(raw));
  const auto m = query(db, q, 1);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].identity, "A");
}

TEST(Query, SelfMatchAtDistanceZero) {
  Gen g(111);
  const GalleryDB db = random_db(g, 12, 16);
  for (size_t i = 0; i < db.size(); ++i) {
    const auto m = query(db, db.records[i].embedding, 3);
    EXPECT_EQ(m[0].index, i);
    EXPECT_NEAR(m[0].distance, 0.0, 1e-6);
  }
}

TEST(Query, FullRankingEqualsBruteForce) {
  Gen g(112);
  for (int t = 0; t < 50; ++t) {
    const GalleryDB db = random_db(g, 12, 8);
    const auto q = unit(g, 8);
    std::vector<std::pair<double, size_t>> brute;
    for (size_t i = 0; i < db.size(); ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < 8; ++j) dot += static_cast<double>(q[j]) * db.records[i].embedding[j];
      brute.push_back({1.0 - dot, i});
    }
    std::sort(brute.begin(), brute.end());
    const auto m = query(db, q, db.size());
    ASSERT_EQ(m.size(), db.size());
    for (size_t r = 0; r < m.size(); ++r) {
      ASSERT_EQ(m[r].index, brute[r].second);
      ASSERT_EQ(m[r].identity, db.records[m[r].index].identity);
      if (r > 0) {
        ASSERT_LE(m[r - 1].distance, m[r].distance);
      }
    }
    EXPECT_EQ(query(db, q, 100).size(), db.size());
  }
}

TEST(Query, CosineAndEuclideanRankingsAgree) {
  Gen g(113);
  for (int t = 0; t < 50; ++t) {
    const GalleryDB db = random_db(g, 20, 6);
    const auto q = unit(g, 6);
    std::vector<std::pair<double, size_t>> euclid;
    for (size_t i = 0; i < db.size(); ++i) {
      double s = 0.0;
      for (size_t j = 0; j < 6; ++j) {
        const double d = static_cast<double>(q[j]) - db.records[i].embedding[j];
        s += d * d;
      }
      euclid.push_back({s, i});
    }
    std::sort(euclid.begin(), euclid.end());
    const auto order = rank_gallery(db, q);
    for (size_t r = 0; r < order.size(); ++r) ASSERT_EQ(order[r], euclid[r].second);
  }
}

TEST(Query, TiesBreakByIndex) {
  const GalleryDB db = make_gallery({"x", "y", "z"}, {{0.0f, 1.0f}, {1.0f, 0.0f}, {1.0f, 0.0f}});
  const auto m = query(db, std::vector<float>{1.0f, 0.0f}, 3);
  EXPECT_EQ(m[0].index, 1u);
  EXPECT_EQ(m[1].index, 2u);
  EXPECT_EQ(m[2].index, 0u);
}

TEST(Query, Errors) {
  Gen g(114);
  const GalleryDB db = random_db(g, 4, 8);
  EXPECT_THROW(query(db, unit(g, 8), 0), InvalidArgument);
  EXPECT_THROW(query(db, unit(g, 7), 1), ShapeError);
  EXPECT_THROW(query(GalleryDB{8, {}}, unit(g, 8), 1), DataError);
  EXPECT_THROW(make_gallery({"a"}, {}), InvalidArgument);
  EXPECT_THROW(make_gallery({"a"}, {{3.0f, 4.0f}}), DataError);
}

TEST(Embed, BothBackendsDeterministicAndUnit) {
  const ModelWeightsF32 f = generate_random_model(build_spec(0.35, 7, 64), 115);
  std::vector<TensorF> imgs;
  for (int i = 0; i < 6; ++i) imgs.push_back(testing_support::identity_image(i, 0));
  const Model fm = f;
  const Model qm = quantize_model(f, calibrate(f, imgs));
  for (const Model* m : {&fm, &qm}) {
    const auto a = embed(*m, imgs[0]);
    EXPECT_EQ(a, embed(*m, imgs[0]));
    EXPECT_EQ(a.size(), 64u);
    double s = 0.0;
    for (float v : a) s += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-5);
    const auto batch = embed_batch(*m, imgs);
    for (size_t i = 0; i < imgs.size(); ++i) EXPECT_EQ(batch[i], embed(*m, imgs[i], ExecPolicy::serial()));
  }
  EXPECT_EQ(spec_of(qm), f.spec);
}

TEST(Enroll, OrderAndCount) {
  TempDir dir("enroll");
  const ModelWeightsF32 f = generate_random_model(build_spec(0.35, 3, 32), 116);
  std::vector<ManifestRecord> rows;
  for (int i = 0; i < 65; ++i) {
    const std::string p = (dir / ("img" + std::to_string(i) + ".ppm")).string();
    write_file(p, encode_ppm(testing_support::identity_rgb(i % 13, i)));
    rows.push_back({p, "id" + std::to_string(i % 13), Split::Gallery});
  }
  const GalleryDB db = enroll(rows, f);
  ASSERT_EQ(db.size(), 65u);
  for (size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(db.records[i].identity, rows[i].identity);
  EXPECT_EQ(db.records[7].embedding, embed(f, load_image(rows[7].path)));
  EXPECT_EQ(enroll({rows[0]}, f).size(), 1u);
  EXPECT_THROW(enroll({}, f), DataError);
}

TEST(LoadAnyModel, DetectsKind) {
  TempDir dir("any");
  const ModelWeightsF32 f = generate_random_model(build_spec(0.35, 2, 16), 117);
  save_model(dir / "f.trw", f);
  EXPECT_TRUE(std::holds_alternative<ModelWeightsF32>(load_any_model(dir / "f.trw")));
  save_model(dir / "q.trq", quantize_model(f, calibrate(f, {testing_support::identity_image(0, 0)})));
  EXPECT_TRUE(std::holds_alternative<ModelWeightsI8>(load_any_model(dir / "q.trq")));
  GalleryDB db{2, {{"a", {1.0f, 0.0f}}}};
  save_gallery(dir / "g.tgal", db);
  EXPECT_THROW(load_any_model(dir / "g.tgal"), FormatError);
}
