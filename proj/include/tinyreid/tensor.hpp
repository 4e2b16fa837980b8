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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tinyreid/error.hpp"

namespace tinyreid {

enum class DType : uint32_t { F32 = 0, I8 = 1, I32 = 2 };

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::F32;
  } else if constexpr (std::is_same_v<T, int8_t>) {
    return DType::I8;
  } else {
    static_assert(std::is_same_v<T, int32_t>, "unsupported tensor element");
    return DType::I32;
  }
}

// Dense row-major tensor. Activations are HWC without a batch axis; weights
// are KhKwCinCout (conv), KhKwC (depthwise) or CinCout (fully connected).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<size_t> dims, T fill = T{})
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

  Tensor(std::vector<size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != data_.size()) {
      throw ShapeError("tensor payload length does not match dims");
    }
  }

  static constexpr DType dtype() { return dtype_of<T>(); }

  const std::vector<size_t>& dims() const { return dims_; }
  size_t rank() const { return dims_.size(); }
  size_t dim(size_t i) const { return dims_.at(i); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  // HWC accessors for rank-3 activations.
  T& at(size_t y, size_t x, size_t c) { return data_[(y * dims_[1] + x) * dims_[2] + c]; }
  const T& at(size_t y, size_t x, size_t c) const {
    return data_[(y * dims_[1] + x) * dims_[2] + c];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  static size_t element_count(const std::vector<size_t>& dims) {
    if (dims.empty()) return 0;
    return std::accumulate(dims.begin(), dims.end(), size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<size_t> dims_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorI8 = Tensor<int8_t>;
using TensorI32 = Tensor<int32_t>;

}  // namespace tinyreid
