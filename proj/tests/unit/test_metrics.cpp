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

#include "oracles.hpp"
#include "support.hpp"
#include "tinyreid/metrics.hpp"
#include "tinyreid/quant.hpp"

using namespace tinyreid;
using testing_support::Gen;

namespace {

struct RandomTask {
  std::vector<std::vector<double>> dist;
  std::vector<std::string> qids, gids;
};

// Distances drawn from a few levels so ties are common.
RandomTask random_task(Gen& g, size_t max_q, size_t max_g) {
  RandomTask t;
  const size_t nq = g.integer(1, static_cast<int>(max_q)), ng = g.integer(1, static_cast<int>(max_g));
  const int n_ids = g.integer(1, 4);
  for (size_t j = 0; j < ng; ++j) t.gids.push_back("i" + std::to_string(g.integer(0, n_ids - 1)));
  for (size_t i = 0; i < nq; ++i) {
    t.qids.push_back(t.gids[g.integer(0, static_cast<int>(ng) - 1)]);
    std::vector<double> row;
    for (size_t j = 0; j < ng; ++j) row.push_back(g.integer(0, 5) * 0.25);
    t.dist.push_back(row);
  }
  return t;
}

}  // namespace

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(average_precision({true, false, false}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({false, true}), 0.5);
  EXPECT_NEAR(average_precision({true, false, true, false, false}), 0.8333333333, 1e-9);
  EXPECT_THROW(average_precision({false, false}), DataError);
}

TEST(Cmc, Examples) {
  EXPECT_EQ(cmc_topk({3}, 1), 0.0);
  EXPECT_EQ(cmc_topk({3}, 5), 1.0);
  EXPECT_EQ(cmc_topk({3}, 10), 1.0);
  EXPECT_EQ(cmc_topk({1, 1, 1}, 1), 1.0);
  EXPECT_EQ(cmc_topk({1, 2, 6, 11}, 5), 0.5);
}

TEST(Evaluate, SingleQueryRelevantAtRankTwo) {
  const EvalReport r = evaluate_distances({{0.1, 0.2, 0.3, 0.4, 0.5}}, {"a"}, {"b", "a", "c", "d", "e"});
  EXPECT_DOUBLE_EQ(r.mAP, 0.5);
  EXPECT_EQ(r.cmc.at(1), 0.0);
  EXPECT_EQ(r.cmc.at(5), 1.0);
  EXPECT_EQ(r.per_query[0].first_hit, 2);
}

TEST(Evaluate, MatchesDefinitionOracle) {
  Gen g(121);
  for (int t = 0; t < 200; ++t) {
    const RandomTask task = random_task(g, 8, 12);
    const EvalReport r = evaluate_distances(task.dist, task.qids, task.gids);
    double map = 0.0;
    std::vector<int> firsts;
    for (size_t i = 0; i < task.qids.size(); ++i) {
      std::vector<bool> rel;
      for (const auto& gid : task.gids) rel.push_back(gid == task.qids[i]);
      const oracle::MetricsOracle o = oracle::query_metrics(task.dist[i], rel);
      ASSERT_NEAR(r.per_query[i].ap, o.ap, 1e-12);
      ASSERT_EQ(r.per_query[i].first_hit, o.first_hit);
      map += o.ap;
      firsts.push_back(o.first_hit);
    }
    ASSERT_NEAR(r.mAP, map / task.qids.size(), 1e-12);
    for (int k : {1, 5, 10}) {
      const double want = static_cast<double>(std::count_if(firsts.begin(), firsts.end(), [&](int f) { return f <= k; })) /
                          firsts.size();
      ASSERT_NEAR(r.cmc.at(k), want, 1e-12);
    }
    ASSERT_LE(r.cmc.at(1), r.cmc.at(5));
    ASSERT_LE(r.cmc.at(5), r.cmc.at(10));
    ASSERT_GE(r.mAP, 0.0);
    ASSERT_LE(r.mAP, 1.0);
  }
}

TEST(Evaluate, QueryPermutationOnlyReordersPerQuery) {
  Gen g(122);
  const RandomTask t = random_task(g, 8, 12);
  RandomTask p = t;
  std::reverse(p.dist.begin(), p.dist.end());
  std::reverse(p.qids.begin(), p.qids.end());
  const EvalReport a = evaluate_distances(t.dist, t.qids, t.gids);
  const EvalReport b = evaluate_distances(p.dist, p.qids, p.gids);
  EXPECT_NEAR(a.mAP, b.mAP, 1e-12);
  EXPECT_EQ(a.cmc, b.cmc);
}

TEST(Evaluate, DuplicatedGalleryKeepsMetrics) {
  Gen g(123);
  for (int t = 0; t < 50; ++t) {
    const RandomTask task = random_task(g, 6, 8);
    RandomTask dup = task;
    // Each record is followed immediately by its copy.
    dup.gids.clear();
    for (const auto& id : task.gids) {
      dup.gids.push_back(id);
      dup.gids.push_back(id);
    }
    for (size_t i = 0; i < task.dist.size(); ++i) {
      dup.dist[i].clear();
      for (double d : task.dist[i]) {
        dup.dist[i].push_back(d);
        dup.dist[i].push_back(d);
      }
    }
    const EvalReport a = evaluate_distances(task.dist, task.qids, task.gids);
    const EvalReport b = evaluate_distances(dup.dist, dup.qids, dup.gids);
    EXPECT_EQ(a.cmc.at(1), b.cmc.at(1));
    // Checked against the oracle on the duplicated task rather than assumed equal.
    double map = 0.0;
    for (size_t i = 0; i < dup.qids.size(); ++i) {
      std::vector<bool> rel;
      for (const auto& gid : dup.gids) rel.push_back(gid == dup.qids[i]);
      map += oracle::query_metrics(dup.dist[i], rel).ap;
    }
    EXPECT_NEAR(b.mAP, map / dup.qids.size(), 1e-12);
  }
}

TEST(Evaluate, SelfRetrievalIsPerfect) {
  Gen g(124);
  GalleryDB db;
  db.embed_dim = 16;
  std::vector<LabeledEmbedding> queries;
  for (int i = 0; i < 10; ++i) {
    const auto raw = g.floats(16, -1, 1);
    const auto e = l2_normalize(std::span<const float>(raw));
    db.records.push_back({"id" + std::to_string(i), e});
    queries.push_back({"id" + std::to_string(i), e});
  }
  const EvalReport r = evaluate(db, queries);
  EXPECT_EQ(r.mAP, 1.0);
  EXPECT_EQ(r.cmc.at(1), 1.0);
  const std::string csv = format_report_csv(r);
  EXPECT_EQ(csv, "metric,value\nmAP,1.0000\ntop1,1.0000\ntop5,1.0000\ntop10,1.0000\n");
  EXPECT_NE(format_report_text(r).find("Top-10"), std::string::npos);
}

TEST(Evaluate, OrphanQueryIsAnError) {
  GalleryDB db{2, {{"a", {1.0f, 0.0f}}}};
  EXPECT_THROW(evaluate(db, {{"b", {1.0f, 0.0f}}}), DataError);
  EXPECT_THROW(evaluate(db, {{"a", {1.0f, 0.0f, 0.0f}}}), ShapeError);
  EXPECT_THROW(evaluate_distances({{0.1}}, {"b"}, {"a"}), DataError);
}
