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
#include <set>
#include <string>

namespace tinyreid {

// Flat key=value run configuration. '#' starts a comment; blank lines are
// ignored. Unknown keys and unparsable values throw InvalidArgument.
struct RunConfig {
  double alpha = 0.35;
  int n_blocks = 7;
  int embed_dim = 128;
  double margin = 0.2;
  double lr = 0.01;
  int epochs = 100;
  uint64_t seed = 0;
  int calib_count = 100;
  int top_k = 5;
  double ratio = 0.8;

  // Keys that were explicitly assigned (by a file or by set()).
  std::set<std::string> assigned;

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return assigned.count(key) != 0; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

const std::set<std::string>& config_keys();

RunConfig parse_config(const std::string& text);
// DataError when the file cannot be read.
RunConfig load_config(const std::string& path);

}  // namespace tinyreid
