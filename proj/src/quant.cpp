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

#include "tinyreid/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tinyreid/error.hpp"

namespace tinyreid {

namespace float_op_counter {
namespace {
thread_local uint64_t g_count = 0;
}
uint64_t value() { return g_count; }
void reset() { g_count = 0; }
void bump() { ++g_count; }
}  // namespace float_op_counter

QuantParams QuantParams::per_tensor(float scale, int32_t zero_point) {
  QuantParams q;
  q.granularity = Granularity::PerTensor;
  q.scales = {scale};
  q.zero_point = zero_point;
  q.validate();
  return q;
}

QuantParams QuantParams::per_channel(std::vector<float> scales) {
  QuantParams q;
  q.granularity = Granularity::PerChannel;
  q.scales = std::move(scales);
  q.zero_point = 0;
  q.validate();
  return q;
}

void QuantParams::validate() const {
  if (scales.empty()) throw InvalidArgument("quant params without scales");
  if (!is_per_channel() && scales.size() != 1) {
    throw InvalidArgument("per-tensor quant params must carry exactly one scale");
  }
  for (float s : scales) {
    if (!(s > 0.0f) || !std::isfinite(s)) {
      throw InvalidArgument("quant scale must be positive and finite, got " + std::to_string(s));
    }
  }
  if (zero_point < kInt8Min || zero_point > kInt8Max) {
    throw InvalidArgument("zero point out of int8 range: " + std::to_string(zero_point));
  }
  if (is_per_channel() && zero_point != 0) {
    throw InvalidArgument("per-channel quant params must be symmetric");
  }
}

double FixedPointMultiplier::to_double() const {
  return std::ldexp(static_cast<double>(mantissa), shift - 31);
}

int64_t round_half_away(double x) {
  constexpr double kLimit = 9.2e18;
  if (std::isnan(x)) return 0;
  if (x >= kLimit) return std::numeric_limits<int64_t>::max();
  if (x <= -kLimit) return std::numeric_limits<int64_t>::min();
  return static_cast<int64_t>(std::round(x));
}

int64_t rounding_divide(int64_t num, int64_t den) {
  const int64_t half = den / 2;
  if (num >= 0) return (num + half) / den;
  return -((-num + half) / den);
}

int8_t saturate_int8(int64_t v) {
  return static_cast<int8_t>(std::clamp<int64_t>(v, kInt8Min, kInt8Max));
}

int8_t quantize_affine(float x, const QuantParams& q) {
  float_op_counter::bump();
  const double r = static_cast<double>(x) / static_cast<double>(q.scale());
  return saturate_int8(round_half_away(r) + q.zero_point);
}

float dequantize_affine(int8_t v, const QuantParams& q) {
  float_op_counter::bump();
  return static_cast<float>(static_cast<double>(static_cast<int32_t>(v) - q.zero_point) *
                            static_cast<double>(q.scale()));
}

FixedPointMultiplier compute_fixed_point(double m) {
  float_op_counter::bump();
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw InvalidArgument("fixed-point multiplier must be positive and finite");
  }
  int exponent = 0;
  const double fraction = std::frexp(m, &exponent);  // m = fraction * 2^exponent, fraction in [0.5, 1)
  int64_t mantissa = round_half_away(std::ldexp(fraction, 31));
  if (mantissa == (int64_t{1} << 31)) {
    mantissa /= 2;
    ++exponent;
  }
  return FixedPointMultiplier{static_cast<int32_t>(mantissa), exponent};
}

int64_t multiply_by_fixed_point(int64_t x, FixedPointMultiplier m) {
  using i128 = __int128;
  const i128 prod = static_cast<i128>(x) * m.mantissa;
  const int rshift = 31 - m.shift;
  i128 result = 0;
  if (rshift > 0) {
    if (rshift < 126) {
      const i128 mag = prod < 0 ? -prod : prod;
      const i128 rounded = (mag + (static_cast<i128>(1) << (rshift - 1))) >> rshift;
      result = prod < 0 ? -rounded : rounded;
    }
  } else {
    const int lshift = -rshift;
    const i128 limit = static_cast<i128>(std::numeric_limits<int64_t>::max());
    if (prod != 0 && (lshift >= 63 || (prod < 0 ? -prod : prod) > (limit >> lshift))) {
      result = prod < 0 ? -limit : limit;
    } else {
      result = prod * (static_cast<i128>(1) << lshift);
    }
  }
  const i128 lo = std::numeric_limits<int64_t>::min();
  const i128 hi = std::numeric_limits<int64_t>::max();
  return static_cast<int64_t>(result < lo ? lo : (result > hi ? hi : result));
}

namespace {

// round(acc * m) with a 64-bit product; |acc * mantissa| < 2^62.
int64_t scale_accumulator(int32_t acc, FixedPointMultiplier m) {
  const int64_t prod = static_cast<int64_t>(acc) * m.mantissa;
  const int rshift = 31 - m.shift;
  if (rshift <= 0) {
    // m >= 2^30: any non-zero accumulator saturates the int8 range.
    if (prod == 0) return 0;
    return prod < 0 ? std::numeric_limits<int32_t>::min() : std::numeric_limits<int32_t>::max();
  }
  if (rshift >= 63) return 0;
  const int64_t mag = prod < 0 ? -prod : prod;
  const int64_t rounded = (mag + (int64_t{1} << (rshift - 1))) >> rshift;
  return prod < 0 ? -rounded : rounded;
}

}  // namespace

int8_t requantize(int32_t acc, FixedPointMultiplier m, int32_t out_zp) {
  return saturate_int8(scale_accumulator(acc, m) + out_zp);
}

int8_t requantize_clamped(int32_t acc, FixedPointMultiplier m, int32_t out_zp, int32_t lo,
                          int32_t hi) {
  return static_cast<int8_t>(
      std::clamp<int64_t>(scale_accumulator(acc, m) + out_zp, std::max(lo, kInt8Min),
                          std::min(hi, kInt8Max)));
}

namespace {

template <typename T>
std::vector<T> normalize_impl(std::span<const T> v) {
  float_op_counter::bump();
  double sq = 0.0;
  for (T x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  std::vector<T> out(v.size(), T{0});
  if (norm < 1e-12) return out;
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(static_cast<double>(v[i]) / norm);
  return out;
}

}  // namespace

std::vector<float> l2_normalize(std::span<const float> v) { return normalize_impl(v); }
std::vector<double> l2_normalize(std::span<const double> v) { return normalize_impl(v); }

}  // namespace tinyreid
