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

#include <string>
#include <vector>

namespace tinyreid {

struct GalleryRecord {
  std::string identity;
  std::vector<float> embedding;  // unit norm

  friend bool operator==(const GalleryRecord&, const GalleryRecord&) = default;
};

// Enrolled reference embeddings in enrollment order.
struct GalleryDB {
  int embed_dim = 0;
  std::vector<GalleryRecord> records;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  // Throws DataError unless every record has embed_dim entries and unit norm
  // within 1e-5.
  void validate() const;

  friend bool operator==(const GalleryDB&, const GalleryDB&) = default;
};

}  // namespace tinyreid
