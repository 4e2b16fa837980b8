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

#include "tinyreid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tinyreid/error.hpp"
#include "tinyreid/random_model.hpp"

namespace tinyreid {

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Gallery: return "gallery";
    case Split::Query: return "query";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "gallery") return Split::Gallery;
  if (text == "query") return Split::Query;
  throw FormatError("unknown split '" + text + "'");
}

std::vector<ManifestRecord> DatasetManifest::rows(Split split) const {
  std::vector<ManifestRecord> out;
  for (const ManifestRecord& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

void DatasetManifest::validate() const {
  std::set<std::string> train, gallery, eval;
  for (const ManifestRecord& r : records) {
    if (r.split == Split::Train) {
      train.insert(r.identity);
    } else {
      eval.insert(r.identity);
      if (r.split == Split::Gallery) gallery.insert(r.identity);
    }
  }
  for (const std::string& id : eval) {
    if (train.count(id)) throw DataError("identity '" + id + "' appears in train and evaluation");
  }
  for (const ManifestRecord& r : records) {
    if (r.split == Split::Query && !gallery.count(r.identity)) {
      throw DataError("query identity '" + r.identity + "' has no gallery image");
    }
  }
}

DatasetManifest split_dataset(std::vector<IdentityImages> groups, double train_ratio,
                              uint64_t seed) {
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) {
    throw InvalidArgument("train ratio must lie in [0, 1]");
  }
  if (groups.size() < 2) throw InvalidArgument("splitting needs at least two identities");
  std::sort(groups.begin(), groups.end(),
            [](const IdentityImages& a, const IdentityImages& b) { return a.identity < b.identity; });
  for (size_t i = 1; i < groups.size(); ++i) {
    if (groups[i].identity == groups[i - 1].identity) {
      throw InvalidArgument("duplicate identity '" + groups[i].identity + "'");
    }
  }

  DeterministicRng rng(seed);
  std::vector<size_t> order(groups.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto n_train =
      static_cast<size_t>(std::floor(train_ratio * static_cast<double>(groups.size()) + 1e-9));

  std::vector<std::vector<Split>> assignment(groups.size());
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const IdentityImages& g = groups[order[rank]];
    std::vector<Split>& splits = assignment[order[rank]];
    if (rank < n_train) {
      splits.assign(g.images.size(), Split::Train);
      continue;
    }
    if (g.images.size() < 2) {
      throw DataError("evaluation identity '" + g.identity + "' needs at least two images");
    }
    std::vector<size_t> idx(g.images.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    const size_t n_query = std::max<size_t>(1, g.images.size() / 3);
    splits.assign(g.images.size(), Split::Gallery);
    for (size_t i = 0; i < n_query; ++i) splits[idx[i]] = Split::Query;
  }

  DatasetManifest manifest;
  for (size_t i = 0; i < groups.size(); ++i) {
    for (size_t j = 0; j < groups[i].images.size(); ++j) {
      manifest.records.push_back({groups[i].images[j], groups[i].identity, assignment[i][j]});
    }
  }
  manifest.validate();
  return manifest;
}

std::vector<ManifestRecord> sample_rows(const std::vector<ManifestRecord>& rows, size_t count,
                                        uint64_t seed) {
  if (rows.size() <= count) return rows;
  std::vector<size_t> idx(rows.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  DeterministicRng rng(seed);
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<ManifestRecord> out;
  out.reserve(count);
  for (size_t i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<IdentityImages> scan_dataset_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
  std::vector<IdentityImages> groups;
  for (const fs::directory_entry& dir : fs::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    IdentityImages g;
    g.identity = dir.path().filename().string();
    for (const fs::directory_entry& f : fs::directory_iterator(dir.path())) {
      const std::string ext = f.path().extension().string();
      if (f.is_regular_file() && (ext == ".ppm" || ext == ".trim")) {
        g.images.push_back(f.path().string());
      }
    }
    std::sort(g.images.begin(), g.images.end());
    if (!g.images.empty()) groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [](const IdentityImages& a, const IdentityImages& b) { return a.identity < b.identity; });
  return groups;
}

namespace {

void check_field(const std::string& f) {
  if (f.find_first_of(",\n\r\"") != std::string::npos) {
    throw InvalidArgument("manifest field contains a separator: " + f);
  }
}

}  // namespace

std::string format_manifest_csv(const DatasetManifest& manifest) {
  std::string out = "path,identity,split\n";
  for (const ManifestRecord& r : manifest.records) {
    check_field(r.path);
    check_field(r.identity);
    out += r.path + "," + r.identity + "," + to_string(r.split) + "\n";
  }
  return out;
}

DatasetManifest parse_manifest_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  DatasetManifest manifest;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "path,identity,split") continue;
    const size_t a = line.find(',');
    const size_t b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos || line.find(',', b + 1) != std::string::npos) {
      throw FormatError("manifest line " + std::to_string(line_no) + " is not path,identity,split");
    }
    manifest.records.push_back(
        {line.substr(0, a), line.substr(a + 1, b - a - 1), parse_split(line.substr(b + 1))});
  }
  return manifest;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_manifest_csv(manifest);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_csv(ss.str());
}

}  // namespace tinyreid
