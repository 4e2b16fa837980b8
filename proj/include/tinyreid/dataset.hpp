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
#include <filesystem>
#include <string>
#include <vector>

namespace tinyreid {

enum class Split { Train, Gallery, Query };

const char* to_string(Split split);
Split parse_split(const std::string& text);

struct ManifestRecord {
  std::string path;
  std::string identity;
  Split split = Split::Train;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<ManifestRecord> rows(Split split) const;
  // Throws DataError when a training identity also appears in the gallery or
  // query split, or a query identity has no gallery image.
  void validate() const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct IdentityImages {
  std::string identity;
  std::vector<std::string> images;
};

// Identity-disjoint split: floor(train_ratio * ids) shuffled identities go to
// train with all their images; every remaining identity contributes
// max(1, n / 3) query images and the rest as gallery images.
DatasetManifest split_dataset(std::vector<IdentityImages> groups, double train_ratio,
                              uint64_t seed);

// Up to `count` rows chosen by seed, in their original order.
std::vector<ManifestRecord> sample_rows(const std::vector<ManifestRecord>& rows, size_t count,
                                        uint64_t seed);

// One identity per sub-directory of root; .ppm and .trim files are images.
// Both levels are sorted by name.
std::vector<IdentityImages> scan_dataset_dir(const std::filesystem::path& root);

// UTF-8 CSV with the header line "path,identity,split".
std::string format_manifest_csv(const DatasetManifest& manifest);
DatasetManifest parse_manifest_csv(const std::string& text);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace tinyreid
