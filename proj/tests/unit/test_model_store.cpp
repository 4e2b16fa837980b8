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

#include <gtest/gtest.h>

#include <cstring>

#include "support.hpp"
#include "tinyreid/model_store.hpp"
#include "tinyreid/ptq.hpp"
#include "tinyreid/random_model.hpp"

using namespace tinyreid;
using testing_support::Gen;
using testing_support::TempDir;

namespace {

ModelWeightsI8 small_int8(uint64_t seed) {
  const ModelWeightsF32 f = generate_random_model(build_spec(0.35, 3, 32), seed);
  return quantize_model(f, calibrate(f, {testing_support::identity_image(seed, 0)}));
}

GalleryDB small_gallery() {
  Gen g(71);
  GalleryDB db;
  db.embed_dim = 8;
  for (const char* id : {"alpha", "beta", "\xc3\xa9t\xc3\xa9"}) {
    const auto v = g.floats(8, -1, 1);
    db.records.push_back({id, l2_normalize(std::span<const float>(v))});
  }
  return db;
}

uint32_t le_u32(const std::vector<uint8_t>& b, size_t at) {
  return uint32_t(b[at]) | uint32_t(b[at + 1]) << 8 | uint32_t(b[at + 2]) << 16 | uint32_t(b[at + 3]) << 24;
}

template <typename Decode>
void expect_format_error(Decode decode, const std::vector<uint8_t>& bytes, const std::string& what) {
  try {
    decode(bytes);
    ADD_FAILURE() << "expected FormatError containing '" << what << "'";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(what), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Crc32, StandardCheckValue) {
  const char* s = "123456789";
  EXPECT_EQ(crc32_of(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s), 9)), 0xCBF43926u);
}

TEST(ModelStore, Fp32RoundtripIsBitwise) {
  for (auto [a, n, d] : {std::tuple{0.35, 7, 128}, std::tuple{0.25, 1, 8}, std::tuple{1.0, 16, 64}}) {
    const ModelWeightsF32 m = generate_random_model(build_spec(a, n, d), 72);
    const auto bytes = encode_model(m);
    EXPECT_EQ(decode_model_f32(bytes), m);
    EXPECT_EQ(encode_model(decode_model_f32(bytes)), bytes);
  }
}

TEST(ModelStore, Int8RoundtripIsBitwise) {
  const ModelWeightsI8 m = small_int8(73);
  const auto bytes = encode_model(m);
  EXPECT_EQ(decode_model_i8(bytes), m);
  EXPECT_EQ(encode_model(decode_model_i8(bytes)), bytes);
}

TEST(ModelStore, GalleryRoundtripIsBitwise) {
  const GalleryDB db = small_gallery();
  const auto bytes = encode_gallery(db);
  EXPECT_EQ(decode_gallery(bytes), db);
  EXPECT_EQ(bytes.size(), 16u + 3u * 2u + (5u + 4u + 5u) + 3u * 32u + 4u);
  GalleryDB empty;
  empty.embed_dim = 4;
  EXPECT_EQ(decode_gallery(encode_gallery(empty)), empty);
}

TEST(ModelStore, HeaderLayoutIsLittleEndian) {
  const ModelWeightsF32 m = generate_random_model(build_spec(0.35, 7, 128), 74);
  const auto b = encode_model(m);
  EXPECT_EQ(std::memcmp(b.data(), "TRW1", 4), 0);
  EXPECT_EQ(le_u32(b, 4), 1u);
  double alpha;
  std::memcpy(&alpha, b.data() + 8, 8);
  EXPECT_EQ(alpha, 0.35);
  EXPECT_EQ(le_u32(b, 16), 7u);
  EXPECT_EQ(le_u32(b, 20), 128u);
  EXPECT_EQ(le_u32(b, b.size() - 4),
            crc32_of(std::span<const uint8_t>(b.data(), b.size() - 4)));
  EXPECT_EQ(detect_file_kind(b), FileKind::ModelF32);
  EXPECT_EQ(detect_file_kind(encode_model(small_int8(1))), FileKind::ModelI8);
  EXPECT_EQ(detect_file_kind(encode_gallery(small_gallery())), FileKind::Gallery);
  EXPECT_EQ(detect_file_kind(std::vector<uint8_t>{1, 2}), FileKind::Unknown);
}

TEST(ModelStore, SizeFormulaMatchesParamCount) {
  for (auto [a, n] : {std::pair{0.35, 7}, std::pair{0.5, 3}, std::pair{0.75, 16}}) {
    const ModelSpec s = build_spec(a, n, 128);
    const size_t tensors = 3 * param_slots(s).size() - 1;  // the FC has no channel scale
    const size_t expected = kHeaderBytes + kTableEntryBytes * tensors + 4 * param_count(s) + 4;
    EXPECT_EQ(serialized_size_f32(s), expected);
    EXPECT_EQ(encode_model(generate_random_model(s, 1)).size(), expected);
    EXPECT_EQ(kHeaderBytes % 16, 0u);
  }
  const ModelWeightsI8 q = small_int8(75);
  EXPECT_EQ(encode_model(q).size(), serialized_size_i8(q.spec));
}

TEST(ModelStore, FlippedPayloadByteFailsChecksum) {
  const auto good = encode_model(generate_random_model(build_spec(0.35, 2, 16), 76));
  Gen g(77);
  for (int t = 0; t < 20; ++t) {
    auto bad = good;
    const size_t at = static_cast<size_t>(g.integer(static_cast<int>(good.size()) - 2000, static_cast<int>(good.size()) - 5));
    bad[at] ^= static_cast<uint8_t>(1 << g.integer(0, 7));
    expect_format_error([](const auto& b) { return decode_model_f32(b); }, bad, "checksum");
  }
  auto qbad = encode_model(small_int8(78));
  qbad[qbad.size() - 10] ^= 0x40;
  expect_format_error([](const auto& b) { return decode_model_i8(b); }, qbad, "checksum");
  auto gbad = encode_gallery(small_gallery());
  gbad[gbad.size() - 7] ^= 0x01;
  expect_format_error([](const auto& b) { return decode_gallery(b); }, gbad, "checksum");
}

TEST(ModelStore, EnvelopeErrors) {
  const auto good = encode_model(generate_random_model(build_spec(0.35, 2, 16), 79));
  auto f32 = [](const auto& b) { return decode_model_f32(b); };
  auto magic = good;
  magic[0] = 'X';
  expect_format_error(f32, magic, "magic");
  auto version = good;
  version[4] = 2;
  expect_format_error(f32, version, "version");
  expect_format_error(f32, std::vector<uint8_t>(good.begin(), good.begin() + 100), "truncated");
  expect_format_error(f32, std::vector<uint8_t>(good.begin(), good.begin() + 6), "truncated");
  auto trailing = good;
  trailing.insert(trailing.end() - 4, uint8_t{0});
  expect_format_error(f32, trailing, "trailing");
  // A TRQ1 file is not a TRW1 file.
  expect_format_error(f32, encode_model(small_int8(2)), "magic");
  expect_format_error([](const auto& b) { return decode_gallery(b); }, good, "magic");
}

TEST(ModelStore, FilesAndErrors) {
  TempDir dir("store");
  const ModelWeightsF32 m = generate_random_model(build_spec(0.35, 2, 16), 80);
  save_model(dir / "m.trw", m);
  EXPECT_EQ(load_model_f32(dir / "m.trw"), m);
  const ModelWeightsI8 q = small_int8(81);
  save_model(dir / "q.trq", q);
  EXPECT_EQ(load_model_i8(dir / "q.trq"), q);
  save_gallery(dir / "g.tgal", small_gallery());
  EXPECT_EQ(load_gallery(dir / "g.tgal"), small_gallery());
  EXPECT_THROW(load_model_f32(dir / "missing.trw"), DataError);
  EXPECT_THROW(load_model_i8(dir / "m.trw"), FormatError);
  EXPECT_THROW(write_file(dir / "no_such_dir" / "x", std::vector<uint8_t>{1}), DataError);
}

TEST(ModelStore, RejectsInvalidGallery) {
  GalleryDB db = small_gallery();
  db.records[1].embedding[0] += 0.5f;
  EXPECT_THROW(encode_gallery(db), DataError);
}
