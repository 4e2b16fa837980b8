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

#include "tinyreid/model_store.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tinyreid/error.hpp"

namespace tinyreid {

namespace {

constexpr char kMagicF32[4] = {'T', 'R', 'W', '1'};
constexpr char kMagicI8[4] = {'T', 'R', 'Q', '1'};
constexpr char kMagicGallery[4] = {'T', 'G', 'A', 'L'};
constexpr uint32_t kMaxRank = 4;

enum class Role : uint32_t { Kernel = 0, ChannelScale = 1, Bias = 2 };

class ByteWriter {
 public:
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

  void finish_with_crc() { u32(crc32_of(out_)); }
  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated file");
  }
  std::span<const uint8_t> take(size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    auto s = take(2);
    return static_cast<uint16_t>(s[0] | (s[1] << 8));
  }
  uint32_t u32() {
    auto s = take(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | s[i];
    return v;
  }
  uint64_t u64() {
    auto s = take(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | s[i];
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  size_t position() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

// Checks magic and version, splits off the CRC trailer and returns a reader
// over the body (magic and version already consumed).
struct Envelope {
  std::span<const uint8_t> body;
  uint32_t stored_crc = 0;
};

Envelope open_envelope(std::span<const uint8_t> bytes, const char (&magic)[4], const char* what) {
  if (bytes.size() < 8) throw FormatError(std::string("truncated ") + what + " file");
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw FormatError(std::string("bad magic: not a ") + what + " file");
  }
  ByteReader r(bytes.subspan(4, 4));
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("version mismatch: " + std::string(what) + " file has version " +
                      std::to_string(version) + ", expected " + std::to_string(kFormatVersion));
  }
  if (bytes.size() < 12) throw FormatError(std::string("truncated ") + what + " file");
  Envelope env;
  env.body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  env.stored_crc = tail.u32();
  return env;
}

void verify_crc(const Envelope& env, const ByteReader& r) {
  if (r.remaining() != 0) throw FormatError("unexpected trailing bytes");
  if (crc32_of(env.body) != env.stored_crc) throw FormatError("checksum mismatch");
}

struct Header {
  double alpha = 0;
  uint32_t n_blocks = 0;
  uint32_t embed_dim = 0;
  uint32_t tensor_count = 0;
};

void write_header(ByteWriter& w, const char (&magic)[4], const ModelSpec& spec,
                  uint32_t tensor_count) {
  w.bytes(magic, 4);
  w.u32(kFormatVersion);
  w.f64(spec.alpha);
  w.u32(static_cast<uint32_t>(spec.n_blocks));
  w.u32(static_cast<uint32_t>(spec.embed_dim));
  w.u32(tensor_count);
  w.u32(0);
}

Header read_header(ByteReader& r) {
  r.take(8);  // magic + version, checked by open_envelope
  Header h;
  h.alpha = r.f64();
  h.n_blocks = r.u32();
  h.embed_dim = r.u32();
  h.tensor_count = r.u32();
  if (r.u32() != 0) throw FormatError("reserved header field is not zero");
  return h;
}

ModelSpec spec_from_header(const Header& h) {
  try {
    return build_spec(h.alpha, static_cast<int>(h.n_blocks), static_cast<int>(h.embed_dim));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }
}

struct TableEntry {
  uint32_t slot = 0;
  Role role = Role::Kernel;
  DType dtype = DType::F32;
  std::vector<size_t> dims;

  size_t elements() const { return Tensor<float>::element_count(dims); }
  size_t bytes() const { return elements() * (dtype == DType::I8 ? 1 : 4); }
};

void write_entry(ByteWriter& w, const TableEntry& e) {
  w.u32(e.slot);
  w.u32(static_cast<uint32_t>(e.role));
  w.u32(static_cast<uint32_t>(e.dtype));
  w.u32(static_cast<uint32_t>(e.dims.size()));
  for (uint32_t i = 0; i < kMaxRank; ++i) {
    w.u32(i < e.dims.size() ? static_cast<uint32_t>(e.dims[i]) : 0);
  }
}

TableEntry read_entry(ByteReader& r) {
  TableEntry e;
  e.slot = r.u32();
  e.role = static_cast<Role>(r.u32());
  e.dtype = static_cast<DType>(r.u32());
  const uint32_t rank = r.u32();
  if (rank == 0 || rank > kMaxRank) throw FormatError("invalid tensor rank");
  for (uint32_t i = 0; i < kMaxRank; ++i) {
    const uint32_t d = r.u32();
    if (i < rank) e.dims.push_back(d);
  }
  return e;
}

void expect_entry(const TableEntry& got, const TableEntry& want) {
  if (got.slot != want.slot || got.role != want.role || got.dtype != want.dtype ||
      got.dims != want.dims) {
    throw FormatError("tensor table does not match the model header (slot " +
                      std::to_string(want.slot) + ")");
  }
}

// Canonical tensor list of a spec: kernel, channel scale (convolutions only),
// bias for every ParamSlot.
std::vector<TableEntry> expected_entries(const ModelSpec& spec, bool int8) {
  std::vector<TableEntry> entries;
  const std::vector<ParamSlot> slots = param_slots(spec);
  for (uint32_t i = 0; i < slots.size(); ++i) {
    const auto cout = static_cast<size_t>(slots[i].cout);
    entries.push_back({i, Role::Kernel, int8 ? DType::I8 : DType::F32, slots[i].kernel_dims()});
    if (int8 || slots[i].has_channel_scale) {
      entries.push_back({i, Role::ChannelScale, DType::F32, {cout}});
    }
    entries.push_back({i, Role::Bias, int8 ? DType::I32 : DType::F32, {cout}});
  }
  return entries;
}

size_t payload_bytes(const std::vector<TableEntry>& entries) {
  size_t n = 0;
  for (const TableEntry& e : entries) n += e.bytes();
  return n;
}

void write_floats(ByteWriter& w, std::span<const float> v) {
  for (float x : v) w.f32(x);
}

std::vector<float> read_floats(ByteReader& r, size_t n) {
  r.need(n * 4);
  std::vector<float> v(n);
  for (float& x : v) x = r.f32();
  return v;
}

}  // namespace

uint32_t crc32_of(std::span<const uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks for large buffers.
  size_t off = 0;
  while (off < bytes.size()) {
    const size_t n = std::min<size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<uint32_t>(crc);
}

// ---------------------------------------------------------------------------

std::vector<uint8_t> encode_model(const ModelWeightsF32& model) {
  validate_weights(model);
  const std::vector<TableEntry> entries = expected_entries(model.spec, false);
  ByteWriter w;
  write_header(w, kMagicF32, model.spec, static_cast<uint32_t>(entries.size()));
  for (const TableEntry& e : entries) write_entry(w, e);
  for (const LayerWeightsF32& layer : model.layers) {
    write_floats(w, layer.kernel.values());
    write_floats(w, layer.scale);
    write_floats(w, layer.bias);
  }
  w.finish_with_crc();
  return w.take();
}

ModelWeightsF32 decode_model_f32(std::span<const uint8_t> bytes) {
  const Envelope env = open_envelope(bytes, kMagicF32, "TRW1");
  ByteReader r(env.body);
  const Header h = read_header(r);
  ModelWeightsF32 model;
  model.spec = spec_from_header(h);
  const std::vector<TableEntry> want = expected_entries(model.spec, false);
  if (h.tensor_count != want.size()) throw FormatError("tensor count does not match the header");
  for (const TableEntry& e : want) expect_entry(read_entry(r), e);
  const std::vector<ParamSlot> slots = param_slots(model.spec);
  for (const ParamSlot& slot : slots) {
    LayerWeightsF32 layer;
    layer.kernel = TensorF(slot.kernel_dims(), read_floats(r, slot.kernel_elements()));
    if (slot.has_channel_scale) layer.scale = read_floats(r, slot.cout);
    layer.bias = read_floats(r, slot.cout);
    model.layers.push_back(std::move(layer));
  }
  verify_crc(env, r);
  return model;
}

std::vector<uint8_t> encode_model(const ModelWeightsI8& model) {
  const std::vector<TableEntry> entries = expected_entries(model.spec, true);
  ByteWriter w;
  write_header(w, kMagicI8, model.spec, static_cast<uint32_t>(entries.size()));
  w.u32(static_cast<uint32_t>(model.act_qparams.size()));
  for (const QuantParams& q : model.act_qparams) {
    w.f32(q.scale());
    w.i32(q.zero_point);
  }
  for (const TableEntry& e : entries) write_entry(w, e);
  for (const LayerWeightsI8& layer : model.layers) {
    const auto k = layer.kernel.values();
    w.bytes(k.data(), k.size());
    write_floats(w, layer.weight_qparams.scales);
    for (int32_t b : layer.bias) w.i32(b);
  }
  w.finish_with_crc();
  return w.take();
}

ModelWeightsI8 decode_model_i8(std::span<const uint8_t> bytes) {
  const Envelope env = open_envelope(bytes, kMagicI8, "TRQ1");
  ByteReader r(env.body);
  const Header h = read_header(r);
  ModelWeightsI8 model;
  model.spec = spec_from_header(h);
  const uint32_t edge_count = r.u32();
  if (edge_count != execution_graph(model.spec).edges.size()) {
    throw FormatError("edge count does not match the model header");
  }
  for (uint32_t i = 0; i < edge_count; ++i) {
    QuantParams q;
    q.scales = {r.f32()};
    q.zero_point = r.i32();
    model.act_qparams.push_back(std::move(q));
  }
  const std::vector<TableEntry> want = expected_entries(model.spec, true);
  if (h.tensor_count != want.size()) throw FormatError("tensor count does not match the header");
  for (const TableEntry& e : want) expect_entry(read_entry(r), e);
  for (const ParamSlot& slot : param_slots(model.spec)) {
    LayerWeightsI8 layer;
    const auto raw = r.take(slot.kernel_elements());
    std::vector<int8_t> k(raw.size());
    std::memcpy(k.data(), raw.data(), raw.size());
    layer.kernel = TensorI8(slot.kernel_dims(), std::move(k));
    layer.weight_qparams.granularity = QuantParams::Granularity::PerChannel;
    layer.weight_qparams.scales = read_floats(r, slot.cout);
    r.need(static_cast<size_t>(slot.cout) * 4);
    for (int c = 0; c < slot.cout; ++c) layer.bias.push_back(r.i32());
    model.layers.push_back(std::move(layer));
  }
  verify_crc(env, r);
  try {
    prepare_int8_model(model);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid quantization parameters: ") + e.what());
  }
  return model;
}

size_t serialized_size_f32(const ModelSpec& spec) {
  const std::vector<TableEntry> entries = expected_entries(spec, false);
  return kHeaderBytes + kTableEntryBytes * entries.size() + payload_bytes(entries) + 4;
}

size_t serialized_size_i8(const ModelSpec& spec) {
  const std::vector<TableEntry> entries = expected_entries(spec, true);
  const size_t edges = execution_graph(spec).edges.size();
  return kHeaderBytes + 4 + 8 * edges + kTableEntryBytes * entries.size() +
         payload_bytes(entries) + 4;
}

// ---------------------------------------------------------------------------

std::vector<uint8_t> encode_gallery(const GalleryDB& db) {
  db.validate();
  ByteWriter w;
  w.bytes(kMagicGallery, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<uint32_t>(db.embed_dim));
  w.u32(static_cast<uint32_t>(db.records.size()));
  for (const GalleryRecord& rec : db.records) {
    if (rec.identity.size() > 0xFFFF) throw InvalidArgument("identity longer than 65535 bytes");
    w.u16(static_cast<uint16_t>(rec.identity.size()));
    w.bytes(rec.identity.data(), rec.identity.size());
    write_floats(w, rec.embedding);
  }
  w.finish_with_crc();
  return w.take();
}

GalleryDB decode_gallery(std::span<const uint8_t> bytes) {
  const Envelope env = open_envelope(bytes, kMagicGallery, "TGAL");
  ByteReader r(env.body);
  r.take(8);
  GalleryDB db;
  db.embed_dim = static_cast<int>(r.u32());
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    GalleryRecord rec;
    const uint16_t len = r.u16();
    const auto id = r.take(len);
    rec.identity.assign(id.begin(), id.end());
    rec.embedding = read_floats(r, static_cast<size_t>(db.embed_dim));
    db.records.push_back(std::move(rec));
  }
  verify_crc(env, r);
  return db;
}

// ---------------------------------------------------------------------------

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

FileKind detect_file_kind(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4) return FileKind::Unknown;
  if (std::memcmp(bytes.data(), kMagicF32, 4) == 0) return FileKind::ModelF32;
  if (std::memcmp(bytes.data(), kMagicI8, 4) == 0) return FileKind::ModelI8;
  if (std::memcmp(bytes.data(), kMagicGallery, 4) == 0) return FileKind::Gallery;
  return FileKind::Unknown;
}

void save_model(const std::filesystem::path& path, const ModelWeightsF32& model) {
  write_file(path, encode_model(model));
}
void save_model(const std::filesystem::path& path, const ModelWeightsI8& model) {
  write_file(path, encode_model(model));
}
ModelWeightsF32 load_model_f32(const std::filesystem::path& path) {
  return decode_model_f32(read_file(path));
}
ModelWeightsI8 load_model_i8(const std::filesystem::path& path) {
  return decode_model_i8(read_file(path));
}
void save_gallery(const std::filesystem::path& path, const GalleryDB& db) {
  write_file(path, encode_gallery(db));
}
GalleryDB load_gallery(const std::filesystem::path& path) { return decode_gallery(read_file(path)); }

}  // namespace tinyreid
