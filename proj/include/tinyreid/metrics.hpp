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

#include <map>
#include <string>
#include <vector>

#include "tinyreid/gallery.hpp"

namespace tinyreid {

inline constexpr int kCmcRanks[] = {1, 5, 10};

struct QueryResult {
  size_t query = 0;
  double ap = 0.0;
  int first_hit = 0;  // 1-based rank of the first correct gallery image
};

struct EvalReport {
  double mAP = 0.0;
  std::map<int, double> cmc;  // rank -> fraction of queries hit within rank
  std::vector<QueryResult> per_query;
};

struct LabeledEmbedding {
  std::string identity;
  std::vector<float> embedding;
};

// (1/R) * sum over relevant positions i of precision@i. Throws DataError when
// nothing is relevant.
double average_precision(const std::vector<bool>& ranked_relevance);

double cmc_topk(const std::vector<int>& first_hit_ranks, int k);

// Rows are queries, columns gallery items. Gallery items are ranked by
// ascending distance with ties broken by column index.
EvalReport evaluate_distances(const std::vector<std::vector<double>>& distances,
                              const std::vector<std::string>& query_ids,
                              const std::vector<std::string>& gallery_ids);

// Throws DataError when a query identity has no gallery record.
EvalReport evaluate(const GalleryDB& db, const std::vector<LabeledEmbedding>& queries);

std::string format_report_text(const EvalReport& report);
// "metric,value" lines: mAP, top1, top5, top10.
std::string format_report_csv(const EvalReport& report);

}  // namespace tinyreid
