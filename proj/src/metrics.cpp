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

#include "tinyreid/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "tinyreid/error.hpp"
#include "tinyreid/reid.hpp"

namespace tinyreid {

double average_precision(const std::vector<bool>& ranked_relevance) {
  size_t hits = 0;
  double sum = 0.0;
  for (size_t i = 0; i < ranked_relevance.size(); ++i) {
    if (!ranked_relevance[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) throw DataError("average precision is undefined without a relevant item");
  return sum / static_cast<double>(hits);
}

double cmc_topk(const std::vector<int>& first_hit_ranks, int k) {
  if (first_hit_ranks.empty()) return 0.0;
  size_t within = 0;
  for (int r : first_hit_ranks) {
    if (r < 1) throw InvalidArgument("ranks are 1-based");
    if (r <= k) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(first_hit_ranks.size());
}

namespace {

EvalReport aggregate(std::vector<QueryResult> per_query) {
  EvalReport report;
  std::vector<int> ranks;
  double ap_sum = 0.0;
  for (const QueryResult& q : per_query) {
    ap_sum += q.ap;
    ranks.push_back(q.first_hit);
  }
  report.mAP = per_query.empty() ? 0.0 : ap_sum / static_cast<double>(per_query.size());
  for (int k : kCmcRanks) report.cmc[k] = cmc_topk(ranks, k);
  report.per_query = std::move(per_query);
  return report;
}

QueryResult score_ranking(size_t query, const std::vector<size_t>& order,
                          const std::string& identity,
                          const std::vector<std::string>& gallery_ids) {
  std::vector<bool> relevant(order.size());
  int first_hit = 0;
  for (size_t r = 0; r < order.size(); ++r) {
    relevant[r] = gallery_ids[order[r]] == identity;
    if (relevant[r] && first_hit == 0) first_hit = static_cast<int>(r + 1);
  }
  if (first_hit == 0) {
    throw DataError("query identity '" + identity + "' has no gallery record");
  }
  return QueryResult{query, average_precision(relevant), first_hit};
}

}  // namespace

EvalReport evaluate_distances(const std::vector<std::vector<double>>& distances,
                              const std::vector<std::string>& query_ids,
                              const std::vector<std::string>& gallery_ids) {
  if (distances.size() != query_ids.size()) throw ShapeError("distance rows != queries");
  std::vector<QueryResult> per_query;
  for (size_t q = 0; q < distances.size(); ++q) {
    const std::vector<double>& row = distances[q];
    if (row.size() != gallery_ids.size()) throw ShapeError("distance columns != gallery size");
    std::vector<size_t> order(row.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return row[a] < row[b]; });
    per_query.push_back(score_ranking(q, order, query_ids[q], gallery_ids));
  }
  return aggregate(std::move(per_query));
}

EvalReport evaluate(const GalleryDB& db, const std::vector<LabeledEmbedding>& queries) {
  std::vector<std::string> gallery_ids;
  for (const GalleryRecord& r : db.records) gallery_ids.push_back(r.identity);
  const std::set<std::string> enrolled(gallery_ids.begin(), gallery_ids.end());
  for (const LabeledEmbedding& q : queries) {
    if (!enrolled.count(q.identity)) {
      throw DataError("query identity '" + q.identity + "' has no gallery record");
    }
    if (q.embedding.size() != static_cast<size_t>(db.embed_dim)) {
      throw ShapeError("query embedding dimension does not match the gallery");
    }
  }
  if (db.empty()) throw DataError("gallery is empty");
  std::vector<QueryResult> per_query(queries.size());
  const int n = static_cast<int>(queries.size());
#pragma omp parallel for schedule(static)
  for (int q = 0; q < n; ++q) {
    per_query[q] = score_ranking(static_cast<size_t>(q), rank_gallery(db, queries[q].embedding),
                                 queries[q].identity, gallery_ids);
  }
  return aggregate(std::move(per_query));
}

std::string format_report_text(const EvalReport& report) {
  char buf[96];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-8s %8.2f%%\n", "mAP", 100.0 * report.mAP);
  out += buf;
  for (const auto& [k, v] : report.cmc) {
    std::snprintf(buf, sizeof buf, "%-8s %8.2f%%\n", ("Top-" + std::to_string(k)).c_str(), 100.0 * v);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-8s %9zu\n", "queries", report.per_query.size());
  out += buf;
  return out;
}

std::string format_report_csv(const EvalReport& report) {
  char buf[64];
  std::string out = "metric,value\n";
  std::snprintf(buf, sizeof buf, "mAP,%.4f\n", report.mAP);
  out += buf;
  for (const auto& [k, v] : report.cmc) {
    std::snprintf(buf, sizeof buf, "top%d,%.4f\n", k, v);
    out += buf;
  }
  return out;
}

}  // namespace tinyreid
