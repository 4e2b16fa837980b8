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
#include <span>
#include <vector>

#include "tinyreid/tensor.hpp"

namespace tinyreid {

// 8-bit interleaved RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Accepts binary PPM (P6, maxval <= 255) and the raw "TRIM" container:
// magic "TRIM", u32 width, u32 height (little-endian), then width*height*3
// bytes of RGB888. Throws FormatError on anything else or on truncation.
RgbImage decode_image(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_ppm(const RgbImage& image);
std::vector<uint8_t> encode_trim(const RgbImage& image);

// HWC float image with x / 127.5 - 1 per channel.
TensorF normalize_rgb(const RgbImage& image);

// Bilinear resampling with half-pixel centers and edge clamping.
TensorF resize_bilinear(const TensorF& src, int out_h, int out_w);

// Decode, resize to 64x64 when needed, normalize to [-1, 1].
TensorF load_image(const std::filesystem::path& path);
TensorF image_to_input(const RgbImage& image);

}  // namespace tinyreid
