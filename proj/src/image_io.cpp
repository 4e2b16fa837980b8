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

#include "tinyreid/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "tinyreid/arch.hpp"
#include "tinyreid/error.hpp"
#include "tinyreid/model_store.hpp"

namespace tinyreid {

namespace {

constexpr size_t kMaxPixels = size_t{1} << 28;

class PpmParser {
 public:
  explicit PpmParser(std::span<const uint8_t> b) : b_(b) {}

  // Whitespace and '#' comments are allowed between header tokens.
  int next_int() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw FormatError("malformed PPM header");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (1L << 24)) throw FormatError("PPM dimension out of range");
    }
    return static_cast<int>(v);
  }

  size_t finish_header() {
    // Exactly one whitespace byte separates maxval from the raster.
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw FormatError("malformed PPM header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const uint8_t> b_;
  size_t pos_ = 2;
};

RgbImage decode_ppm(std::span<const uint8_t> bytes) {
  PpmParser p(bytes);
  RgbImage img;
  img.width = p.next_int();
  img.height = p.next_int();
  const int maxval = p.next_int();
  if (maxval <= 0 || maxval > 255) throw FormatError("unsupported PPM maxval (8-bit only)");
  if (img.width <= 0 || img.height <= 0) throw FormatError("PPM has an empty raster");
  const size_t start = p.finish_header();
  const size_t n = static_cast<size_t>(img.width) * img.height * 3;
  if (n / 3 > kMaxPixels) throw FormatError("PPM too large");
  if (bytes.size() < start + n) throw FormatError("truncated PPM raster");
  img.rgb.assign(bytes.begin() + start, bytes.begin() + start + n);
  if (maxval != 255) {
    for (uint8_t& v : img.rgb) v = static_cast<uint8_t>(std::lround(v * 255.0 / maxval));
  }
  return img;
}

uint32_t read_le32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

RgbImage decode_trim(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("truncated TRIM header");
  RgbImage img;
  const uint32_t w = read_le32(bytes.data() + 4);
  const uint32_t h = read_le32(bytes.data() + 8);
  if (w == 0 || h == 0) throw FormatError("TRIM image has an empty raster");
  if (static_cast<uint64_t>(w) * h > kMaxPixels) throw FormatError("TRIM image too large");
  const size_t n = static_cast<size_t>(w) * h * 3;
  if (bytes.size() < 12 + n) throw FormatError("truncated TRIM raster");
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.assign(bytes.begin() + 12, bytes.begin() + 12 + n);
  return img;
}

}  // namespace

RgbImage decode_image(std::span<const uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "TRIM", 4) == 0) return decode_trim(bytes);
  throw FormatError("unsupported image format (expected binary PPM or TRIM)");
}

std::vector<uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

std::vector<uint8_t> encode_trim(const RgbImage& image) {
  std::vector<uint8_t> out = {'T', 'R', 'I', 'M'};
  for (uint32_t v : {static_cast<uint32_t>(image.width), static_cast<uint32_t>(image.height)}) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

TensorF normalize_rgb(const RgbImage& image) {
  TensorF t({static_cast<size_t>(image.height), static_cast<size_t>(image.width), 3});
  for (size_t i = 0; i < image.rgb.size(); ++i) {
    t[i] = static_cast<float>(image.rgb[i] / 127.5 - 1.0);
  }
  return t;
}

TensorF resize_bilinear(const TensorF& src, int out_h, int out_w) {
  if (src.rank() != 3 || out_h <= 0 || out_w <= 0) throw ShapeError("resize: bad shape");
  const int in_h = static_cast<int>(src.dim(0));
  const int in_w = static_cast<int>(src.dim(1));
  const size_t ch = src.dim(2);
  TensorF out({static_cast<size_t>(out_h), static_cast<size_t>(out_w), ch});
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      for (size_t c = 0; c < ch; ++c) {
        const double a = src.at(y0, x0, c), b = src.at(y0, x1, c);
        const double d = src.at(y1, x0, c), e = src.at(y1, x1, c);
        const double top = a + wx * (b - a);
        const double bottom = d + wx * (e - d);
        out.at(y, x, c) = static_cast<float>(top + wy * (bottom - top));
      }
    }
  }
  return out;
}

TensorF image_to_input(const RgbImage& image) {
  TensorF t = normalize_rgb(image);
  if (image.height == kInputSize && image.width == kInputSize) return t;
  return resize_bilinear(t, kInputSize, kInputSize);
}

TensorF load_image(const std::filesystem::path& path) {
  return image_to_input(decode_image(read_file(path)));
}

}  // namespace tinyreid
