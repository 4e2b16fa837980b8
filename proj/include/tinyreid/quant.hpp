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
#include <span>
#include <vector>

namespace tinyreid {

// Affine quantization parameters: real = (q - zero_point) * scale.
// Per-tensor params carry one scale; per-channel params carry one scale per
// output channel and are always symmetric (zero_point == 0).
struct QuantParams {
  enum class Granularity : uint32_t { PerTensor = 0, PerChannel = 1 };

  Granularity granularity = Granularity::PerTensor;
  std::vector<float> scales{1.0f};
  int32_t zero_point = 0;

  static QuantParams per_tensor(float scale, int32_t zero_point);
  static QuantParams per_channel(std::vector<float> scales);

  bool is_per_channel() const { return granularity == Granularity::PerChannel; }
  float scale() const { return scales.front(); }
  // Throws InvalidArgument when a scale is non-positive or the zero point is
  // out of range or a per-channel set is asymmetric.
  void validate() const;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

// m ~= mantissa * 2^(shift - 31), mantissa in [2^30, 2^31).
struct FixedPointMultiplier {
  int32_t mantissa = 1 << 30;
  int32_t shift = 0;

  double to_double() const;
  friend bool operator==(const FixedPointMultiplier&, const FixedPointMultiplier&) = default;
};

inline constexpr int32_t kInt8Min = -128;
inline constexpr int32_t kInt8Max = 127;

// Round to nearest, ties away from zero.
int64_t round_half_away(double x);
// Integer division rounding to nearest, ties away from zero. den > 0.
int64_t rounding_divide(int64_t num, int64_t den);

int8_t saturate_int8(int64_t v);

int8_t quantize_affine(float x, const QuantParams& q);
float dequantize_affine(int8_t v, const QuantParams& q);

FixedPointMultiplier compute_fixed_point(double m);

// round(x * m) using integer arithmetic only, ties away from zero, saturated
// to the int64 range.
int64_t multiply_by_fixed_point(int64_t x, FixedPointMultiplier m);

int8_t requantize(int32_t acc, FixedPointMultiplier m, int32_t out_zp);
// Same, with the result clamped to [lo, hi] (fused activation).
int8_t requantize_clamped(int32_t acc, FixedPointMultiplier m, int32_t out_zp, int32_t lo,
                          int32_t hi);

std::vector<float> l2_normalize(std::span<const float> v);
std::vector<double> l2_normalize(std::span<const double> v);

// Counts calls into the floating-point helpers above on the calling thread.
// The integer inference path is expected to leave it untouched.
namespace float_op_counter {
uint64_t value();
void reset();
void bump();
}  // namespace float_op_counter

}  // namespace tinyreid
