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
#include <string>
#include <vector>

#include "tinyreid/arch.hpp"
#include "tinyreid/gallery.hpp"
#include "tinyreid/kernels_fp32.hpp"
#include "tinyreid/kernels_int8.hpp"

// Binary formats. All integers and floats are little-endian; every file ends
// with a CRC32 (zlib polynomial) of all bytes before it.
//
//   header (32 bytes)  magic[4] u32 version f64 alpha u32 n_blocks
//                      u32 embed_dim u32 tensor_count u32 reserved(0)
//   TRW1               header, tensor table, f32 payload, crc
//   TRQ1               header, u32 edge_count, edge_count x {f32 scale,
//                      i32 zero_point}, tensor table, payload, crc
//   tensor table entry u32 slot u32 role u32 dtype u32 rank u32 dims[4]
//                      (role 0 kernel, 1 channel scale, 2 bias; unused dims 0)
//   TGAL               magic u32 version u32 d u32 count, count x {u16 id_len,
//                      id bytes (UTF-8), d x f32}, crc
namespace tinyreid {

inline constexpr uint32_t kFormatVersion = 1;
inline constexpr size_t kHeaderBytes = 32;
inline constexpr size_t kTableEntryBytes = 32;

enum class FileKind { ModelF32, ModelI8, Gallery, Unknown };

uint32_t crc32_of(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_model(const ModelWeightsF32& model);
std::vector<uint8_t> encode_model(const ModelWeightsI8& model);
std::vector<uint8_t> encode_gallery(const GalleryDB& db);

ModelWeightsF32 decode_model_f32(std::span<const uint8_t> bytes);
ModelWeightsI8 decode_model_i8(std::span<const uint8_t> bytes);
GalleryDB decode_gallery(std::span<const uint8_t> bytes);

size_t serialized_size_f32(const ModelSpec& spec);
size_t serialized_size_i8(const ModelSpec& spec);

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);
FileKind detect_file_kind(std::span<const uint8_t> bytes);

void save_model(const std::filesystem::path& path, const ModelWeightsF32& model);
void save_model(const std::filesystem::path& path, const ModelWeightsI8& model);
ModelWeightsF32 load_model_f32(const std::filesystem::path& path);
ModelWeightsI8 load_model_i8(const std::filesystem::path& path);
void save_gallery(const std::filesystem::path& path, const GalleryDB& db);
GalleryDB load_gallery(const std::filesystem::path& path);

}  // namespace tinyreid
