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

#include "tinyreid/config.hpp"

#include <charconv>
#include <limits>
#include <sstream>

#include "tinyreid/error.hpp"
#include "tinyreid/model_store.hpp"

namespace tinyreid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

int parse_positive_int(const std::string& key, const std::string& value) {
  const int v = parse_number<int>(key, value);
  if (v < 1) throw InvalidArgument("config key '" + key + "' must be >= 1");
  return v;
}

}  // namespace

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {"alpha",  "n_blocks",    "embed_dim", "margin",
                                             "lr",     "epochs",      "seed",      "calib_count",
                                             "top_k",  "ratio"};
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "alpha") {
    alpha = parse_number<double>(key, value);
  } else if (key == "n_blocks") {
    n_blocks = parse_number<int>(key, value);
  } else if (key == "embed_dim") {
    embed_dim = parse_positive_int(key, value);
  } else if (key == "margin") {
    margin = parse_number<double>(key, value);
  } else if (key == "lr") {
    lr = parse_number<double>(key, value);
  } else if (key == "epochs") {
    epochs = parse_number<int>(key, value);
    if (epochs < 0) throw InvalidArgument("config key 'epochs' must be >= 0");
  } else if (key == "seed") {
    seed = parse_number<uint64_t>(key, value);
  } else if (key == "calib_count") {
    calib_count = parse_positive_int(key, value);
  } else if (key == "top_k") {
    top_k = parse_positive_int(key, value);
  } else if (key == "ratio") {
    ratio = parse_number<double>(key, value);
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("config key 'ratio' must be in (0, 1)");
  } else {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
  assigned.insert(key);
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace tinyreid
