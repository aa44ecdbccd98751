// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/tensor_archive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "forge/error.hpp"
#include "json.hpp"

namespace forge {

using nlohmann::json;

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return "F32";
    case DType::kFloat16: return "F16";
    case DType::kInt4: return "I4";
  }
  return "?";
}

std::optional<DType> parse_dtype(std::string_view name) {
  if (name == "F32") return DType::kFloat32;
  if (name == "F16") return DType::kFloat16;
  if (name == "I4") return DType::kInt4;
  return std::nullopt;
}

int64_t element_count(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

int64_t QuantizedTensor::group_count() const {
  if (group_size <= 0) return 0;
  return element_count(padded_shape) / group_size;
}

Tensor Tensor::f32(Shape shape, std::vector<float> values) {
  Tensor t;
  t.dtype = DType::kFloat32;
  t.shape = std::move(shape);
  t.values = std::move(values);
  return t;
}

Tensor Tensor::f16(Shape shape, std::vector<float> values) {
  Tensor t = f32(std::move(shape), std::move(values));
  t.dtype = DType::kFloat16;
  return t;
}

Tensor Tensor::quantized(QuantizedTensor q) {
  Tensor t;
  t.dtype = DType::kInt4;
  t.shape = q.padded_shape;
  t.int4 = std::move(q);
  return t;
}

size_t Tensor::storage_bytes() const {
  const auto n = static_cast<size_t>(numel());
  switch (dtype) {
    case DType::kFloat32: return n * 4;
    case DType::kFloat16: return n * 2;
    case DType::kInt4: return (n + 1) / 2;
  }
  return 0;
}

uint16_t float_to_half(float value) {
  const uint32_t x = std::bit_cast<uint32_t>(value);
  const uint32_t sign = (x >> 16) & 0x8000u;
  const uint32_t exp = (x >> 23) & 0xffu;
  uint32_t mant = x & 0x7fffffu;
  if (exp == 0xff) {
    if (mant == 0) return static_cast<uint16_t>(sign | 0x7c00u);
    uint32_t m = mant >> 13;
    if (m == 0) m = 0x200;  // keep it a NaN
    return static_cast<uint16_t>(sign | 0x7c00u | m);
  }
  const int32_t e = static_cast<int32_t>(exp) - 127 + 15;
  if (e >= 0x1f) return static_cast<uint16_t>(sign | 0x7c00u);
  if (e <= 0) {
    if (e < -10) return static_cast<uint16_t>(sign);
    mant |= 0x800000u;
    const int shift = 14 - e;
    uint32_t half_mant = mant >> shift;
    const uint32_t rem = mant & ((1u << shift) - 1);
    const uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half_mant & 1u))) ++half_mant;
    return static_cast<uint16_t>(sign | half_mant);
  }
  uint32_t half = sign | (static_cast<uint32_t>(e) << 10) | (mant >> 13);
  const uint32_t rem = mant & 0x1fffu;
  // A carry out of the mantissa correctly bumps the exponent.
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
  return static_cast<uint16_t>(half);
}

float half_to_float(uint16_t bits) {
  const uint32_t sign = static_cast<uint32_t>(bits & 0x8000u) << 16;
  const uint32_t exp = (bits >> 10) & 0x1fu;
  const uint32_t mant = bits & 0x3ffu;
  if (exp == 0) {
    const float mag = std::ldexp(static_cast<float>(mant), -24);
    return sign ? -mag : mag;
  }
  if (exp == 0x1f) {
    return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  }
  return std::bit_cast<float>(sign | ((exp + 112) << 23) | (mant << 13));
}

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

std::string encode_f32(const std::vector<float>& values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (float v : values) put_u32(out, std::bit_cast<uint32_t>(v));
  return out;
}

std::string encode_f16(const std::vector<float>& values) {
  std::string out;
  out.reserve(values.size() * 2);
  for (float v : values) put_u16(out, float_to_half(v));
  return out;
}

std::vector<float> decode_f32(std::string_view bytes) {
  std::vector<float> out(bytes.size() / 4);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return out;
}

std::vector<float> decode_f16(std::string_view bytes) {
  std::vector<float> out(bytes.size() / 2);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] = half_to_float(get_u16(p + 2 * i));
  return out;
}

struct Entry {
  std::string name;
  DType dtype;
  Shape shape;
  std::string bytes;
};

std::string scales_name(const std::string& n) { return n + ".scales"; }
std::string zeros_name(const std::string& n) { return n + ".zeros"; }
std::string channel_name(const std::string& n) { return n + ".channel_scales"; }

void validate_shape(const std::string& name, const Shape& shape) {
  if (shape.empty()) {
    throw Error(Errc::kInvalidTensor, "tensor '" + name + "' has rank 0");
  }
  for (int64_t d : shape) {
    if (d <= 0) {
      throw Error(Errc::kInvalidTensor,
                  "tensor '" + name + "' has non-positive dimension in shape " +
                      shape_to_string(shape));
    }
  }
}

void validate_int4(const std::string& name, const Tensor& t) {
  const QuantizedTensor& q = t.int4;
  if (q.padded_shape != t.shape) {
    throw Error(Errc::kInvalidTensor, "int4 tensor '" + name + "' padded shape mismatch");
  }
  if (q.group_size < 2 || t.shape.back() % q.group_size != 0) {
    throw Error(Errc::kInvalidTensor,
                "int4 tensor '" + name + "' inner dimension not a multiple of group size");
  }
  if (q.packed.size() != t.storage_bytes()) {
    throw Error(Errc::kCorruptedPack, "int4 tensor '" + name + "' packed length mismatch");
  }
  const auto groups = static_cast<size_t>(q.group_count());
  if (q.scales.size() != groups || q.zeros.size() != groups) {
    throw Error(Errc::kInvalidTensor, "int4 tensor '" + name + "' group table size mismatch");
  }
  if (!q.channel_scales.empty() &&
      q.channel_scales.size() != static_cast<size_t>(t.shape.back())) {
    throw Error(Errc::kInvalidTensor, "int4 tensor '" + name + "' channel scale size mismatch");
  }
  if (q.original_shape.size() != t.shape.size()) {
    throw Error(Errc::kInvalidTensor, "int4 tensor '" + name + "' original shape rank mismatch");
  }
  for (size_t i = 0; i < t.shape.size(); ++i) {
    if (q.original_shape[i] <= 0 || q.original_shape[i] > t.shape[i]) {
      throw Error(Errc::kInvalidTensor, "int4 tensor '" + name + "' original shape out of range");
    }
  }
}

[[noreturn]] void malformed(const std::string& why) {
  throw Error(Errc::kMalformedHeader, "malformed archive header: " + why);
}

}  // namespace

std::string serialize_archive(const TensorArchive& archive) {
  if (archive.metadata.count(std::string(kInt4MetadataKey))) {
    throw Error(Errc::kInvalidArgument,
                "metadata key '" + std::string(kInt4MetadataKey) + "' is reserved");
  }

  std::vector<Entry> entries;
  json int4_meta = json::object();
  for (const auto& [name, t] : archive.tensors) {
    validate_shape(name, t.shape);
    switch (t.dtype) {
      case DType::kFloat32:
      case DType::kFloat16:
        if (t.values.size() != static_cast<size_t>(t.numel())) {
          throw Error(Errc::kInvalidTensor,
                      "tensor '" + name + "' element count does not match shape");
        }
        entries.push_back({name, t.dtype, t.shape,
                           t.dtype == DType::kFloat32 ? encode_f32(t.values)
                                                      : encode_f16(t.values)});
        break;
      case DType::kInt4: {
        validate_int4(name, t);
        const QuantizedTensor& q = t.int4;
        entries.push_back(
            {name, DType::kInt4, t.shape, std::string(q.packed.begin(), q.packed.end())});
        const int64_t groups = q.group_count();
        entries.push_back({scales_name(name), DType::kFloat32, {groups}, encode_f32(q.scales)});
        entries.push_back({zeros_name(name), DType::kFloat32, {groups}, encode_f32(q.zeros)});
        if (!q.channel_scales.empty()) {
          entries.push_back({channel_name(name), DType::kFloat32, {t.shape.back()},
                             encode_f32(q.channel_scales)});
        }
        int4_meta[name] = {{"group_size", q.group_size},
                           {"original_shape", q.original_shape},
                           {"symmetric", q.symmetric},
                           {"channel_scales", !q.channel_scales.empty()}};
        break;
      }
    }
  }

  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.name < b.name; });
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].name == entries[i - 1].name) {
      throw Error(Errc::kInvalidTensor,
                  "tensor name '" + entries[i].name + "' collides with an int4 companion table");
    }
  }

  json header = json::object();
  json meta = json::object();
  for (const auto& [k, v] : archive.metadata) meta[k] = v;
  if (!int4_meta.empty()) meta[std::string(kInt4MetadataKey)] = int4_meta.dump();
  if (!meta.empty()) header["__metadata__"] = meta;

  uint64_t offset = 0;
  for (const Entry& e : entries) {
    const uint64_t end = offset + e.bytes.size();
    header[e.name] = {{"dtype", dtype_name(e.dtype)},
                      {"shape", e.shape},
                      {"data_offsets", {offset, end}}};
    offset = end;
  }

  std::string header_text = header.dump();
  // Pad with spaces so the data section starts 8-byte aligned.
  header_text.append((8 - header_text.size() % 8) % 8, ' ');

  std::string out;
  out.reserve(8 + header_text.size() + offset);
  put_u64(out, header_text.size());
  out += header_text;
  for (const Entry& e : entries) out += e.bytes;
  return out;
}

TensorArchive deserialize_archive(std::string_view bytes) {
  if (bytes.size() < 8) malformed("file shorter than the length prefix");
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint64_t header_len = get_u64(base);
  if (header_len > bytes.size() - 8) malformed("header length exceeds file size");

  const std::string_view header_text = bytes.substr(8, header_len);
  const std::string_view data = bytes.substr(8 + header_len);

  json header = json::parse(header_text, nullptr, /*allow_exceptions=*/false);
  if (header.is_discarded() || !header.is_object()) malformed("header is not a JSON object");

  TensorArchive archive;
  struct Raw {
    std::string name;
    DType dtype;
    Shape shape;
    uint64_t begin;
    uint64_t end;
  };
  std::vector<Raw> raws;

  for (auto it = header.begin(); it != header.end(); ++it) {
    if (it.key() == "__metadata__") {
      if (!it->is_object()) malformed("__metadata__ is not an object");
      for (auto m = it->begin(); m != it->end(); ++m) {
        if (!m->is_string()) malformed("metadata value for '" + m.key() + "' is not a string");
        archive.metadata[m.key()] = m->get<std::string>();
      }
      continue;
    }
    const json& info = *it;
    if (!info.is_object() || !info.contains("dtype") || !info.contains("shape") ||
        !info.contains("data_offsets")) {
      malformed("entry '" + it.key() + "' lacks dtype/shape/data_offsets");
    }
    if (!info["dtype"].is_string()) malformed("entry '" + it.key() + "' dtype is not a string");
    const auto dtype = parse_dtype(info["dtype"].get<std::string>());
    if (!dtype) {
      throw Error(Errc::kUnknownDtype, "unknown dtype '" + info["dtype"].get<std::string>() +
                                           "' for tensor '" + it.key() + "'");
    }
    Raw raw{it.key(), *dtype, {}, 0, 0};
    if (!info["shape"].is_array()) malformed("entry '" + it.key() + "' shape is not an array");
    for (const json& d : info["shape"]) {
      if (!d.is_number_unsigned()) malformed("entry '" + it.key() + "' has a bad dimension");
      raw.shape.push_back(d.get<int64_t>());
    }
    const json& offs = info["data_offsets"];
    if (!offs.is_array() || offs.size() != 2 || !offs[0].is_number_unsigned() ||
        !offs[1].is_number_unsigned()) {
      malformed("entry '" + it.key() + "' has bad data_offsets");
    }
    raw.begin = offs[0].get<uint64_t>();
    raw.end = offs[1].get<uint64_t>();
    if (raw.end < raw.begin) malformed("entry '" + it.key() + "' has reversed offsets");
    Tensor probe;
    probe.dtype = raw.dtype;
    probe.shape = raw.shape;
    if (raw.end - raw.begin != probe.storage_bytes()) {
      malformed("entry '" + it.key() + "' byte range does not match dtype and shape");
    }
    raws.push_back(std::move(raw));
  }

  std::sort(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  uint64_t cursor = 0;
  for (const Raw& r : raws) {
    if (r.begin < cursor) {
      throw Error(Errc::kOverlappingOffsets, "tensor '" + r.name + "' overlaps its predecessor");
    }
    if (r.begin > cursor) malformed("gap in data section before '" + r.name + "'");
    cursor = r.end;
  }
  if (cursor > data.size()) {
    throw Error(Errc::kTruncatedData, "data section holds " + std::to_string(data.size()) +
                                          " bytes but header declares " + std::to_string(cursor));
  }
  if (cursor < data.size()) malformed("trailing bytes after the last tensor");

  for (const Raw& r : raws) {
    const std::string_view slice = data.substr(r.begin, r.end - r.begin);
    Tensor t;
    t.dtype = r.dtype;
    t.shape = r.shape;
    switch (r.dtype) {
      case DType::kFloat32: t.values = decode_f32(slice); break;
      case DType::kFloat16: t.values = decode_f16(slice); break;
      case DType::kInt4:
        t.int4.packed.assign(slice.begin(), slice.end());
        t.int4.padded_shape = r.shape;
        break;
    }
    archive.tensors.emplace(r.name, std::move(t));
  }

  // Fold int4 companion tables back into their owning tensors.
  json int4_meta = json::object();
  if (auto it = archive.metadata.find(std::string(kInt4MetadataKey)); it != archive.metadata.end()) {
    int4_meta = json::parse(it->second, nullptr, false);
    if (int4_meta.is_discarded() || !int4_meta.is_object()) malformed("bad int4 metadata");
    archive.metadata.erase(it);
  }
  auto take_table = [&](const std::string& name) -> std::vector<float> {
    auto it = archive.tensors.find(name);
    if (it == archive.tensors.end() || it->second.dtype != DType::kFloat32) {
      malformed("missing int4 table '" + name + "'");
    }
    std::vector<float> v = std::move(it->second.values);
    archive.tensors.erase(it);
    return v;
  };
  for (auto& [name, t] : archive.tensors) {
    if (t.dtype == DType::kInt4 && !int4_meta.contains(name)) {
      malformed("int4 tensor '" + name + "' has no group metadata");
    }
  }
  for (auto m = int4_meta.begin(); m != int4_meta.end(); ++m) {
    auto it = archive.tensors.find(m.key());
    if (it == archive.tensors.end() || it->second.dtype != DType::kInt4) {
      malformed("int4 metadata names unknown tensor '" + m.key() + "'");
    }
    QuantizedTensor& q = it->second.int4;
    try {
      q.group_size = m->at("group_size").get<int64_t>();
      q.original_shape = m->at("original_shape").get<Shape>();
      q.symmetric = m->at("symmetric").get<bool>();
      q.scales = take_table(scales_name(m.key()));
      q.zeros = take_table(zeros_name(m.key()));
      if (m->at("channel_scales").get<bool>()) q.channel_scales = take_table(channel_name(m.key()));
    } catch (const json::exception& e) {
      malformed("int4 metadata for '" + m.key() + "': " + e.what());
    }
    validate_int4(m.key(), it->second);
  }
  return archive;
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::kIo, "read failure on '" + path.string() + "'");
  return deserialize_archive(bytes);
}

void write_archive(const TensorArchive& archive, const std::filesystem::path& path) {
  const std::string bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "write failure on '" + path.string() + "'");
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.dtype != b.dtype || a.shape != b.shape) return false;
  if (a.dtype == DType::kInt4) {
    return a.int4.packed == b.int4.packed && encode_f32(a.int4.scales) == encode_f32(b.int4.scales) &&
           encode_f32(a.int4.zeros) == encode_f32(b.int4.zeros) &&
           encode_f32(a.int4.channel_scales) == encode_f32(b.int4.channel_scales) &&
           a.int4.original_shape == b.int4.original_shape &&
           a.int4.group_size == b.int4.group_size && a.int4.symmetric == b.int4.symmetric;
  }
  if (a.values.size() != b.values.size()) return false;
  return std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) == 0;
}

bool bitwise_equal(const TensorArchive& a, const TensorArchive& b) {
  if (a.metadata != b.metadata || a.tensors.size() != b.tensors.size()) return false;
  auto ia = a.tensors.begin();
  auto ib = b.tensors.begin();
  for (; ia != a.tensors.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !bitwise_equal(ia->second, ib->second)) return false;
  }
  return true;
}

}  // namespace forge
