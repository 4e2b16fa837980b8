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

// Generators and fixtures shared by the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tinyreid/image_io.hpp"
#include "tinyreid/tensor.hpp"

namespace testing_support {

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  int64_t integer64(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng_);
  }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

  tinyreid::TensorF tensor(std::vector<size_t> dims, double lo = -1.0, double hi = 1.0) {
    tinyreid::TensorF t(std::move(dims));
    for (float& v : t.values()) v = static_cast<float>(real(lo, hi));
    return t;
  }
  tinyreid::TensorI8 tensor_i8(std::vector<size_t> dims, int lo = -128, int hi = 127) {
    tinyreid::TensorI8 t(std::move(dims));
    for (int8_t& v : t.values()) v = static_cast<int8_t>(integer(lo, hi));
    return t;
  }
  std::vector<float> floats(size_t n, double lo, double hi) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(real(lo, hi));
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

// A smooth colour pattern fixed by `identity`, plus per-sample uniform noise.
// Different identities give clearly different images; samples of one
// identity differ only by the noise.
inline tinyreid::TensorF identity_image(uint64_t identity, uint64_t sample, double noise = 0.05) {
  std::mt19937_64 pattern(identity * 7919 + 17);
  std::mt19937_64 jitter(identity * 104729 + sample * 31 + 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double fx[3][3], fy[3][3], ph[3][3];
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k) {
      fx[c][k] = 0.02 + 0.28 * u(pattern);
      fy[c][k] = 0.02 + 0.28 * u(pattern);
      ph[c][k] = 6.283185307179586 * u(pattern);
    }
  tinyreid::TensorF t({64, 64, 3});
  for (size_t y = 0; y < 64; ++y)
    for (size_t x = 0; x < 64; ++x)
      for (size_t c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) v += std::sin(fx[c][k] * x + fy[c][k] * y + ph[c][k]) / 3.0;
        v += noise * (2.0 * u(jitter) - 1.0);
        t.at(y, x, c) = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
  return t;
}

// The same pattern as 8-bit RGB, for tests that go through image files.
inline tinyreid::RgbImage identity_rgb(uint64_t identity, uint64_t sample, double noise = 0.05) {
  const tinyreid::TensorF t = identity_image(identity, sample, noise);
  tinyreid::RgbImage img;
  img.width = 64;
  img.height = 64;
  img.rgb.resize(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    img.rgb[i] = static_cast<uint8_t>(std::lround((t[i] + 1.0) * 127.5));
  }
  return img;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tinyreid_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
