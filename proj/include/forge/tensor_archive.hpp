// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat tensor archive: an 8-byte little-endian header length, a UTF-8 JSON
// header mapping tensor names to {dtype, shape, data_offsets}, then the raw
// little-endian tensor bytes. Offsets are relative to the start of the data
// section, as in the common safetensors layout.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

enum class DType { kFloat32, kFloat16, kInt4 };

std::string_view dtype_name(DType dtype);
std::optional<DType> parse_dtype(std::string_view name);

using Shape = std::vector<int64_t>;

int64_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Group-wise 4-bit payload. Codes are packed two per byte, low nibble
/// first, in row-major order over the padded shape. Element x is
/// reconstructed as (code * scale[g] + zero[g]) / channel_scale[col].
struct QuantizedTensor {
  std::vector<uint8_t> packed;
  std::vector<float> scales;
  std::vector<float> zeros;
  std::vector<float> channel_scales;  // empty means identity
  Shape original_shape;
  Shape padded_shape;
  int64_t group_size = 128;
  bool symmetric = false;

  int64_t group_count() const;
  bool operator==(const QuantizedTensor&) const = default;
};

struct Tensor {
  DType dtype = DType::kFloat32;
  Shape shape;
  // float32 and float16 payloads, held as float32 for arithmetic.
  std::vector<float> values;
  // kInt4 payload; shape == int4.padded_shape.
  QuantizedTensor int4;

  static Tensor f32(Shape shape, std::vector<float> values);
  static Tensor f16(Shape shape, std::vector<float> values);
  static Tensor quantized(QuantizedTensor q);

  int64_t numel() const { return element_count(shape); }
  // Bytes this tensor occupies in the data section (excluding int4
  // companion tables).
  size_t storage_bytes() const;
  bool is_float() const { return dtype != DType::kInt4; }

  bool operator==(const Tensor&) const = default;
};

// Compares dtype, shape and the serialized byte image, so NaN payloads and
// signed zeros are distinguished.
bool bitwise_equal(const Tensor& a, const Tensor& b);

struct TensorArchive {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> metadata;

  bool operator==(const TensorArchive&) const = default;
};

bool bitwise_equal(const TensorArchive& a, const TensorArchive& b);

/// Metadata key reserved for int4 bookkeeping.
inline constexpr std::string_view kInt4MetadataKey = "forge.int4";

std::string serialize_archive(const TensorArchive& archive);
TensorArchive deserialize_archive(std::string_view bytes);

TensorArchive read_archive(const std::filesystem::path& path);
void write_archive(const TensorArchive& archive,
                   const std::filesystem::path& path);

// IEEE half conversions, round-to-nearest-even on the way down.
uint16_t float_to_half(float value);
float half_to_float(uint16_t bits);

}  // namespace forge
